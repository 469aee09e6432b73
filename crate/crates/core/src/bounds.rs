//! Finite-sample deviation bound `B_n(x₀, α, λ)` for the RKRD estimator,
//! evaluated from plug-in spectral statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SpectralStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// Operator-norm deviation radius.
    pub t: f64,
    pub b_n: f64,
    pub ell: f64,
    pub x0: f64,
    /// Whether the theorem's proof conditions hold for this `t`.
    pub valid: bool,
    /// Empty when `valid`.
    pub validity_reason: String,
    /// Population spectra were replaced by empirical ones. Always true here.
    pub plug_in: bool,
}

fn check_level(x0: f64) -> Result<()> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::invalid(format!("level x0 must lie in (0, 1), got {x0}")));
    }
    Ok(())
}

/// `(ℓ, t)` with `ℓ = log(14 tr(Σ−Σ²) / (‖Σ−Σ²‖ x₀))` and
/// `t = (ℓ/3 + sqrt((ℓ/3)² + 2nℓ‖Σ−Σ²‖)) / n`.
pub fn bernstein_t(n: usize, x0: f64, stats: &SpectralStats) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    check_level(x0)?;
    if !(stats.norm_gap_p > 0.0) {
        return Err(Error::DegenerateSpectrum(
            "norm gap ‖Σ − Σ²‖ is zero (rank-one empirical covariance); effective rank undefined".into(),
        ));
    }
    let nf = n as f64;
    let ell = (14.0 * stats.trace_gap_p / (stats.norm_gap_p * x0)).ln();
    let third = ell / 3.0;
    let t = (third + (third * third + 2.0 * nf * ell * stats.norm_gap_p).sqrt()) / nf;
    Ok((ell, t))
}

/// `B_n` for a given deviation radius `t`.
pub fn bn_from_t(t: f64, alpha: f64, lambda: f64, stats: &SpectralStats) -> Result<f64> {
    if !(stats.trace_alpha_p > 0.0) {
        return Err(Error::DegenerateSpectrum("tr[Σ_p^α] is zero".into()));
    }
    let a1 = alpha - 1.0;
    let head = (stats.top_eig_q + (1.0 + 1.0 / alpha) * lambda).powf(a1);
    let mid = 2.0 * alpha * lambda.powf(1.0 - alpha) + 4.0 * a1;
    Ok(head * mid / (a1 * stats.trace_alpha_p) * t)
}

/// Lower end of the range where the operator Bernstein tail applies, with
/// `U = 1/n` and `σ² = ‖Σ−Σ²‖/n`.
pub fn bernstein_floor(n: usize, stats: &SpectralStats) -> f64 {
    let u = 1.0 / n as f64;
    let var = stats.norm_gap_p / n as f64;
    (u + (u * u + 36.0 * var).sqrt()) / 6.0
}

fn validity(t: f64, n: usize, alpha: f64, lambda: f64, stats: &SpectralStats) -> (bool, String) {
    let mut reasons = Vec::new();
    if t > lambda / alpha {
        reasons.push(format!(
            "t = {t:.6e} exceeds lambda/alpha = {:.6e}; the deviation bound needs t <= lambda/alpha",
            lambda / alpha
        ));
    }
    let floor = bernstein_floor(n, stats);
    if t < floor {
        reasons.push(format!(
            "t = {t:.6e} is below the Bernstein applicability floor {floor:.6e}"
        ));
    }
    (reasons.is_empty(), reasons.join("; "))
}

/// Evaluates the bound without the `α ≥ 2` requirement. Callers that go
/// below `α = 2` must treat the result as invalid.
pub fn bn_bound_unchecked(
    n: usize,
    x0: f64,
    alpha: f64,
    lambda: f64,
    stats: &SpectralStats,
) -> Result<BoundResult> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be finite and > 1, got {alpha}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "lambda must be positive for a finite-sample bound, got {lambda}"
        )));
    }
    let (ell, t) = bernstein_t(n, x0, stats)?;
    let b_n = bn_from_t(t, alpha, lambda, stats)?;
    let (valid, validity_reason) = validity(t, n, alpha, lambda, stats);
    Ok(BoundResult {
        t,
        b_n,
        ell,
        x0,
        valid,
        validity_reason,
        plug_in: true,
    })
}

/// `B_n(x₀, α, λ) = (‖Σ_q‖ + (1+1/α)λ)^{α−1} (2αλ^{1−α} + 4(α−1)) / ((α−1) tr[Σ_p^α]) · t`.
pub fn bn_bound(
    n: usize,
    x0: f64,
    alpha: f64,
    lambda: f64,
    stats: &SpectralStats,
) -> Result<BoundResult> {
    if !(alpha >= 2.0) {
        return Err(Error::invalid(format!("the bound needs alpha >= 2, got {alpha}")));
    }
    bn_bound_unchecked(n, x0, alpha, lambda, stats)
}
