//! Empirical RKRD statistic `D_α,λ(Σ̂_p‖Σ̂_q)` from two sample sets.
//!
//! The canonical route works with the `n_p × n_p` symmetric matrix
//!
//! ```text
//! G = (1/n_p) [ f(λ) K_xx + K_xy U diag((f(μ_i + λ) − f(λ)) / (n_q μ_i)) Uᵀ K_yx ]
//! ```
//!
//! where `f(t) = t^((1−α)/α)` and `(1/n_q) K_yy = U diag(μ) Uᵀ`. Its spectrum is
//! the nonzero spectrum of `(Σ̂_q + λI)^β Σ̂_p (Σ̂_q + λI)^β`. The `2n × 2n`
//! block construction is kept as an independent cross-check.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram, gram_self, Kernel, KernelSpec, SampleSet};
use crate::qrd::KERNEL_MASS_TOL;
use crate::spectral::{self, SymMatrix, CLAMP_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Symmetric,
    Block,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkrdEstimate {
    /// Nats. `+∞` only when `lambda = 0` and `p` has mass outside the
    /// support of `q`.
    pub value: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub n_p: usize,
    pub n_q: usize,
    pub bandwidth: f64,
    pub method: Method,
}

/// Plug-in spectral quantities of the empirical covariance operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    /// `‖Σ̂_q‖`
    pub top_eig_q: f64,
    /// `tr(Σ̂_p − Σ̂_p²)`
    pub trace_gap_p: f64,
    /// `‖Σ̂_p − Σ̂_p²‖`
    pub norm_gap_p: f64,
    /// `tr[Σ̂_p^α]`
    pub trace_alpha_p: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be finite and > 1, got {alpha}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// `ln Σ v^α` over the positive entries, computed without overflow.
fn log_power_sum(values: &[f64], alpha: f64) -> f64 {
    let top = values.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let s: f64 = values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| (v / top).powf(alpha))
        .sum();
    alpha * top.ln() + s.ln()
}

/// Eigenvalues with round-off negatives removed; anything below `-ε` is an
/// error.
fn clamp_spectrum(mut values: Vec<f64>) -> Result<Vec<f64>> {
    let tol = CLAMP_REL_TOL * values.iter().copied().fold(0.0, f64::max);
    for v in &mut values {
        if *v < -tol {
            return Err(Error::NotPsd {
                eigenvalue: *v,
                tolerance: tol,
            });
        }
        *v = v.max(0.0);
    }
    Ok(values)
}

/// Gram blocks and the spectrum of `(1/n_q) K_yy`, shared by every `(α, λ)`
/// evaluated on one sample pair.
#[derive(Debug, Clone)]
pub struct GridEstimator {
    kernel: Kernel,
    n_p: usize,
    n_q: usize,
    kxx: DMatrix<f64>,
    /// `K_xy U`
    w: DMatrix<f64>,
    /// eigenvalues of `(1/n_q) K_yy`, descending, clamped
    mu: Vec<f64>,
    /// `μ_i ≤ mu_tol` are treated as zero
    mu_tol: f64,
}

impl GridEstimator {
    pub fn new(spec: &KernelSpec, xs: &SampleSet, ys: &SampleSet) -> Result<Self> {
        let kernel = spec.resolve(xs, ys)?;
        let (n_p, n_q) = (xs.n(), ys.n());
        let kxx = gram_self(&kernel, xs);
        let kxy = gram(&kernel, xs, ys)?;
        let kyy = gram_self(&kernel, ys);

        let q = spectral::sym_eig(&SymMatrix::new(kyy / n_q as f64)?)?;
        let mu = q.clamped_values()?;
        let mu_tol = q.clamp_tolerance();
        let w = kxy * &q.vectors;
        Ok(GridEstimator {
            kernel,
            n_p,
            n_q,
            kxx,
            w,
            mu,
            mu_tol,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    fn retained(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mu.len()).filter(move |&i| self.mu[i] > self.mu_tol)
    }

    /// `W diag(c) Wᵀ` with `c` given on the retained directions; built as a
    /// signed Gram product so that symmetry is exact.
    fn weighted_outer(&self, coeff: &[(usize, f64)]) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.n_p, coeff.len());
        let mut sign = vec![0.0; coeff.len()];
        for (k, &(i, c)) in coeff.iter().enumerate() {
            z.set_column(k, &(self.w.column(i) * c.abs().sqrt()));
            sign[k] = c.signum();
        }
        let mut zs = z.clone();
        for (k, s) in sign.iter().enumerate() {
            zs.column_mut(k).scale_mut(*s);
        }
        zs * z.transpose()
    }

    /// Mass of `Σ̂_p` outside the span of the retained `y`-features.
    fn out_of_span_mass(&self) -> f64 {
        let inside: f64 = self
            .retained()
            .map(|i| self.w.column(i).norm_squared() / (self.n_q as f64 * self.mu[i]))
            .sum();
        (self.kxx.trace() - inside) / self.n_p as f64
    }

    /// The raw `G` matrix, before any symmetrization. `None` means the
    /// divergence is `+∞` (only possible at `λ = 0`).
    pub fn g_matrix(&self, alpha: f64, lambda: f64) -> Result<Option<DMatrix<f64>>> {
        check_alpha(alpha)?;
        check_lambda(lambda)?;
        let e = (1.0 - alpha) / alpha;
        let nq = self.n_q as f64;

        let g = if lambda > 0.0 {
            let fl = lambda.powf(e);
            // (f(μ+λ) − f(λ)) / μ, stable for μ ≪ λ
            let coeff: Vec<(usize, f64)> = self
                .retained()
                .map(|i| {
                    let mu = self.mu[i];
                    (i, fl * (e * (mu / lambda).ln_1p()).exp_m1() / (nq * mu))
                })
                .collect();
            &self.kxx * fl + self.weighted_outer(&coeff)
        } else {
            let tol = KERNEL_MASS_TOL + nq * self.mu_tol;
            if self.out_of_span_mass() > tol {
                return Ok(None);
            }
            let coeff: Vec<(usize, f64)> = self
                .retained()
                .map(|i| (i, self.mu[i].powf(e) / (nq * self.mu[i])))
                .collect();
            self.weighted_outer(&coeff)
        };
        Ok(Some(g / self.n_p as f64))
    }

    pub fn estimate(&self, alpha: f64, lambda: f64) -> Result<RkrdEstimate> {
        let value = match self.g_matrix(alpha, lambda)? {
            None => f64::INFINITY,
            Some(g) => {
                let ev = clamp_spectrum(spectral::sym_eigvals(&SymMatrix::new(g)?)?)?;
                let trace_p = self.kxx.trace() / self.n_p as f64;
                (log_power_sum(&ev, alpha) - trace_p.ln()) / (alpha - 1.0)
            }
        };
        Ok(RkrdEstimate {
            value,
            alpha,
            lambda,
            n_p: self.n_p,
            n_q: self.n_q,
            bandwidth: self.kernel.bandwidth,
            method: Method::Symmetric,
        })
    }

    pub fn spectral_stats(&self, alpha: f64) -> Result<SpectralStats> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        let p = spectral::sym_eigvals(&SymMatrix::new(&self.kxx / self.n_p as f64)?)?;
        let p = clamp_spectrum(p)?;
        let sum: f64 = p.iter().sum();
        let sum_sq: f64 = p.iter().map(|m| m * m).sum();
        let norm_gap = p.iter().map(|m| m - m * m).fold(0.0, f64::max);
        Ok(SpectralStats {
            top_eig_q: self.mu.first().copied().unwrap_or(0.0),
            trace_gap_p: (sum - sum_sq).max(0.0),
            norm_gap_p: norm_gap,
            trace_alpha_p: spectral::power_sum(&p, alpha),
        })
    }
}

/// Canonical estimator through the symmetric `n_p × n_p` route.
pub fn estimate_symmetric(
    spec: &KernelSpec,
    xs: &SampleSet,
    ys: &SampleSet,
    alpha: f64,
    lambda: f64,
) -> Result<RkrdEstimate> {
    check_alpha(alpha)?;
    check_lambda(lambda)?;
    GridEstimator::new(spec, xs, ys)?.estimate(alpha, lambda)
}

pub fn spectral_stats(
    spec: &KernelSpec,
    xs: &SampleSet,
    ys: &SampleSet,
    alpha: f64,
) -> Result<SpectralStats> {
    GridEstimator::new(spec, xs, ys)?.spectral_stats(alpha)
}

/// Estimator through the `2n × 2n` block matrices
/// `K_p = [K_xx K_xy; 0 0]`, `K_q = [0 0; K_yx K_yy]`, using general
/// eigendecompositions. Needs `n_p == n_q`.
///
/// At `λ = 0` the power is taken on the support of `K_q` only, so mass of
/// `p` outside that support is ignored rather than reported as `+∞`.
pub fn estimate_block(
    spec: &KernelSpec,
    xs: &SampleSet,
    ys: &SampleSet,
    alpha: f64,
    lambda: f64,
) -> Result<RkrdEstimate> {
    check_alpha(alpha)?;
    check_lambda(lambda)?;
    if xs.n() != ys.n() {
        return Err(Error::invalid(format!(
            "block route needs equal sample counts, got {} and {}",
            xs.n(),
            ys.n()
        )));
    }
    let kernel = spec.resolve(xs, ys)?;
    let n = xs.n();
    let nf = n as f64;
    let kxx = gram_self(&kernel, xs);
    let kxy = gram(&kernel, xs, ys)?;
    let kyy = gram_self(&kernel, ys);

    let mut kp = DMatrix::zeros(2 * n, 2 * n);
    kp.view_mut((0, 0), (n, n)).copy_from(&kxx);
    kp.view_mut((0, n), (n, n)).copy_from(&kxy);
    let mut kq = DMatrix::zeros(2 * n, 2 * n);
    kq.view_mut((n, 0), (n, n)).copy_from(&kxy.transpose());
    kq.view_mut((n, n), (n, n)).copy_from(&kyy);

    let beta = (1.0 - alpha) / (2.0 * alpha);
    let shifted = kq / nf + DMatrix::identity(2 * n, 2 * n) * lambda;
    let zero_tol = CLAMP_REL_TOL * (1.0 + lambda);
    let s = spectral::general_apply(&shifted, |t| if t > zero_tol { t.powf(beta) } else { 0.0 })?;
    let m = &s * (kp / nf) * &s;
    let ev: Vec<f64> = spectral::general_eigvals(&m)?
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    let trace_p = kxx.trace() / nf;

    Ok(RkrdEstimate {
        value: (log_power_sum(&ev, alpha) - trace_p.ln()) / (alpha - 1.0),
        alpha,
        lambda,
        n_p: n,
        n_q: n,
        bandwidth: kernel.bandwidth,
        method: Method::Block,
    })
}
