//! Gaussian mechanism with exact `(ε, δ)` calibration, and the closed-form
//! Rényi divergence between its two output distributions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::SampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    /// Output distribution on `D`.
    D,
    /// Output distribution on the adjacent `D'`.
    DPrime,
}

/// `f(D) + N(0, σ² I)` against `f(D') + N(0, σ² I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMechanism {
    pub sigma: f64,
    pub center_d: Vec<f64>,
    pub center_d_prime: Vec<f64>,
    pub seed: u64,
}

impl GaussianMechanism {
    pub fn new(sigma: f64, center_d: Vec<f64>, center_d_prime: Vec<f64>, seed: u64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if center_d.is_empty() || center_d.len() != center_d_prime.len() {
            return Err(Error::invalid("centers must be non-empty and of equal dimension"));
        }
        if center_d.iter().chain(&center_d_prime).any(|v| !v.is_finite()) {
            return Err(Error::invalid("centers must be finite"));
        }
        Ok(GaussianMechanism {
            sigma,
            center_d,
            center_d_prime,
            seed,
        })
    }

    /// Centers `0` and `Δ e₁` in dimension `dim`.
    pub fn with_sensitivity(dim: usize, sensitivity: f64, sigma: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(sensitivity >= 0.0) || !sensitivity.is_finite() {
            return Err(Error::invalid(format!("sensitivity must be >= 0, got {sensitivity}")));
        }
        let mut shifted = vec![0.0; dim];
        shifted[0] = sensitivity;
        Self::new(sigma, vec![0.0; dim], shifted, seed)
    }

    pub fn dim(&self) -> usize {
        self.center_d.len()
    }

    /// `‖f(D) − f(D')‖₂`
    pub fn sensitivity(&self) -> f64 {
        self.center_d
            .iter()
            .zip(&self.center_d_prime)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `n` i.i.d. draws. Each side has its own ChaCha stream, so the output
    /// depends only on `(seed, which, n)`.
    pub fn sample(&self, which: Which, n: usize) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        let (center, stream) = match which {
            Which::D => (&self.center_d, 0),
            Which::DPrime => (&self.center_d_prime, 1),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let d = center.len();
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            for c in center {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(c + self.sigma * z);
            }
        }
        SampleSet::new(n, d, data)
    }
}

/// Standard normal CDF through `erfc`, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `Φ(Δ/(2σ) − εσ/Δ) − e^ε Φ(−Δ/(2σ) − εσ/Δ)`; the mechanism is
/// `(ε, δ)`-DP exactly when this is at most `δ`.
pub fn balle_condition(sigma: f64, delta_sens: f64, epsilon: f64) -> f64 {
    let a = delta_sens / (2.0 * sigma);
    let b = epsilon * sigma / delta_sens;
    let tail = normal_cdf(-a - b);
    // e^ε Φ(·) in log space: e^ε alone overflows long before the product does
    let weighted = if tail > 0.0 { (epsilon + tail.ln()).exp() } else { 0.0 };
    normal_cdf(a - b) - weighted
}

/// Smallest `σ` (to relative width 1e-10) with `balle_condition ≤ δ`,
/// found by bisection on `[1e-6 Δ, 1e3 Δ]`.
pub fn calibrate_sigma(epsilon: f64, delta: f64, delta_sens: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(delta_sens > 0.0) || !delta_sens.is_finite() {
        return Err(Error::invalid(format!("sensitivity must be positive, got {delta_sens}")));
    }
    let holds = |s: f64| balle_condition(s, delta_sens, epsilon) <= delta;
    let (mut lo, mut hi) = (1e-6 * delta_sens, 1e3 * delta_sens);
    if holds(lo) {
        return Err(Error::CalibrationFailure(format!(
            "condition already holds at the lower end sigma = {lo:e}"
        )));
    }
    if !holds(hi) {
        return Err(Error::CalibrationFailure(format!(
            "condition fails even at sigma = {hi:e}"
        )));
    }
    while (hi - lo) > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Rényi divergence of order `α` between `N(μ, σ²I)` and `N(μ', σ²I)` with
/// `‖μ − μ'‖ = Δ`.
pub fn gaussian_renyi(alpha: f64, delta_sens: f64, sigma: f64) -> f64 {
    alpha * delta_sens * delta_sens / (2.0 * sigma * sigma)
}

/// `Δ sqrt(2 log(1.25/δ)) / ε`, the textbook sufficient noise level.
pub fn classic_sigma(epsilon: f64, delta: f64, delta_sens: f64) -> f64 {
    delta_sens * (2.0 * (1.25 / delta).ln()).sqrt() / epsilon
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-1.959_963_984_540_054) - 0.025).abs() < 1e-15);
        // deep tail keeps relative accuracy
        let t = normal_cdf(-10.0);
        assert!((t / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn condition_vanishes_for_large_epsilon() {
        assert!(balle_condition(10.0, 10.0, 50.0).abs() < 1e-10);
    }

    #[test]
    fn condition_decreases_in_sigma() {
        for s in [1.0, 5.0, 21.0, 100.0] {
            assert!(balle_condition(1.1 * s, 10.0, 1.0) < balle_condition(s, 10.0, 1.0));
        }
    }

    #[test]
    fn calibration_brackets_the_root() {
        for (e, d) in [(1.0, 0.005), (2.0, 0.2), (3.0, 0.03), (0.5, 1e-5)] {
            let s = calibrate_sigma(e, d, 10.0).unwrap();
            assert!(balle_condition(s, 10.0, e) <= d);
            assert!(balle_condition(s * (1.0 - 1e-8), 10.0, e) > d);
            assert!((balle_condition(s, 10.0, e) - d).abs() < 1e-8);
        }
    }

    #[test]
    fn classic_formula_is_more_conservative() {
        for (e, d) in [(1.0, 0.005), (2.0, 0.2), (3.0, 0.03)] {
            assert!(classic_sigma(e, d, 10.0) >= calibrate_sigma(e, d, 10.0).unwrap());
        }
    }

    #[test]
    fn calibration_monotone_in_epsilon_and_delta() {
        let base = calibrate_sigma(1.0, 0.01, 10.0).unwrap();
        assert!(calibrate_sigma(2.0, 0.01, 10.0).unwrap() < base);
        assert!(calibrate_sigma(1.0, 0.05, 10.0).unwrap() < base);
    }

    #[test]
    fn calibration_rejects_bad_input() {
        assert!(calibrate_sigma(0.0, 0.1, 1.0).is_err());
        assert!(calibrate_sigma(1.0, 1.0, 1.0).is_err());
        assert!(calibrate_sigma(1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn renyi_reference_values() {
        assert!((gaussian_renyi(6.0, 10.0, 6.0669) - 8.1506).abs() < 1e-4);
        assert!((gaussian_renyi(12.0, 10.0, 7.1850) - 11.6224).abs() < 1e-4);
        assert_eq!(gaussian_renyi(2.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn sampling_is_deterministic_and_centered() {
        let m = GaussianMechanism::with_sensitivity(3, 10.0, 2.0, 9).unwrap();
        assert_eq!(m.sensitivity(), 10.0);
        let a = m.sample(Which::D, 50).unwrap();
        assert_eq!(a, m.sample(Which::D, 50).unwrap());
        assert_ne!(a, m.sample(Which::DPrime, 50).unwrap());

        let tiny = GaussianMechanism::with_sensitivity(4, 1.0, 1e-12, 3).unwrap();
        let s = tiny.sample(Which::DPrime, 20).unwrap();
        for row in s.rows() {
            assert!((row[0] - 1.0).abs() < 1e-9);
            assert!(row[1..].iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn empirical_mean_within_clt_band() {
        let n = 100_000;
        let m = GaussianMechanism::new(2.0, vec![1.0, -3.0], vec![0.0, 0.0], 17).unwrap();
        let s = m.sample(Which::D, n).unwrap();
        for (c, center) in [1.0, -3.0].iter().enumerate() {
            let mean = s.rows().map(|r| r[c]).sum::<f64>() / n as f64;
            assert!((mean - center).abs() < 4.0 * 2.0 / (n as f64).sqrt());
        }
    }
}
