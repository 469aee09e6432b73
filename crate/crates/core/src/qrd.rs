//! Sandwiched quantum Rényi divergence between finite PSD matrices, with
//! ridge regularization of the reference operator.
//!
//! For `A, B ⪰ 0`, `tr A > 0` and `α ∈ (0,1) ∪ (1,∞)`:
//!
//! ```text
//! D_α(A‖B)   = 1/(α−1) · log( tr[(B^β A B^β)^α] / tr A ),   β = (1−α)/(2α)
//! D_α,λ(A‖B) = D_α(A‖B + λI)
//! ```
//!
//! Fractional powers of `B` act on its support only. When `α > 1` and `A`
//! puts mass on a null direction of `B` the divergence is `+∞`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::{self, SymMatrix};

/// A-mass on a null direction of B above which `D_α` (α > 1) is infinite.
pub const KERNEL_MASS_TOL: f64 = 1e-10;

/// Trace-preservation tolerance for Kraus channels.
pub const TRACE_PRESERVING_TOL: f64 = 1e-10;

/// The "state" `a` and "reference" `b` of a divergence evaluation.
#[derive(Debug, Clone)]
pub struct PsdPair {
    a: SymMatrix,
    b: SymMatrix,
}

impl PsdPair {
    pub fn new(a: SymMatrix, b: SymMatrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} vs {}",
                a.dim(),
                b.dim()
            )));
        }
        // clamped_values reports NotPsd
        spectral::sym_eig(&a)?.clamped_values()?;
        spectral::sym_eig(&b)?.clamped_values()?;
        if !(a.trace() > 0.0) {
            return Err(Error::invalid("state must have positive trace"));
        }
        Ok(PsdPair { a, b })
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn b(&self) -> &SymMatrix {
        &self.b
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!("order must be positive and finite, got {alpha}")));
    }
    if alpha == 1.0 {
        return Err(Error::invalid("order 1 (relative-entropy limit) is not supported"));
    }
    Ok(())
}

/// Unnormalized quantity `tr[(B^β A B^β)^α]`, or `None` when it is infinite
/// (α > 1 and `A` leaks into the kernel of `B`).
pub(crate) fn sandwiched_trace(a: &SymMatrix, b: &SymMatrix, alpha: f64) -> Result<Option<f64>> {
    let spec = spectral::sym_eig(b)?;
    let mu = spec.clamped_values()?;
    let tol = spec.clamp_tolerance();
    let beta = (1.0 - alpha) / (2.0 * alpha);

    let mut g = Vec::with_capacity(mu.len());
    for (i, &m) in mu.iter().enumerate() {
        if m > tol && m > 0.0 {
            g.push(m.powf(beta));
        } else {
            if alpha > 1.0 {
                let v = spec.vectors.column(i);
                let mass = (v.transpose() * a.as_matrix() * v)[(0, 0)];
                if mass > KERNEL_MASS_TOL {
                    return Ok(None);
                }
            }
            g.push(0.0);
        }
    }
    let s = spec.compose(&g);
    let sandwich = SymMatrix::new(&s * a.as_matrix() * &s)?;
    Ok(Some(spectral::trace_power(&sandwich, alpha)?))
}

fn divergence_from_trace(trace: Option<f64>, trace_a: f64, alpha: f64) -> f64 {
    match trace {
        None => f64::INFINITY,
        Some(t) if t <= 0.0 => {
            // A entirely outside the support of B
            if alpha < 1.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        }
        Some(t) => (t / trace_a).ln() / (alpha - 1.0),
    }
}

/// Sandwiched quantum Rényi divergence `D_α(A‖B)`; may be `+∞`.
pub fn qrd(pair: &PsdPair, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    let t = sandwiched_trace(&pair.a, &pair.b, alpha)?;
    Ok(divergence_from_trace(t, pair.a.trace(), alpha))
}

/// Regularized divergence `D_α,λ(A‖B) = D_α(A‖B + λI)`.
pub fn qrd_reg(pair: &PsdPair, alpha: f64, lambda: f64) -> Result<f64> {
    check_order(alpha)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let b = pair.b.shifted(lambda);
    let t = sandwiched_trace(&pair.a, &b, alpha)?;
    Ok(divergence_from_trace(t, pair.a.trace(), alpha))
}

/// Kronecker product `A ⊗ C`.
pub fn tensor_product(a: &SymMatrix, c: &SymMatrix) -> SymMatrix {
    SymMatrix::new(a.as_matrix().kronecker(c.as_matrix()))
        .expect("kronecker product of square matrices is square")
}

/// Block-diagonal `A ⊕ C`.
pub fn direct_sum(a: &SymMatrix, c: &SymMatrix) -> SymMatrix {
    let (n, m) = (a.dim(), c.dim());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a.as_matrix());
    out.view_mut((n, n), (m, m)).copy_from(c.as_matrix());
    SymMatrix::new(out).expect("direct sum of square matrices is square")
}

/// A completely positive trace-preserving map `M ↦ Σ K_k M K_kᵀ`.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    operators: Vec<DMatrix<f64>>,
}

impl KrausChannel {
    pub fn new(operators: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::invalid("channel needs at least one Kraus operator"))?;
        let (dim_out, dim_in) = first.shape();
        if operators.iter().any(|k| k.shape() != (dim_out, dim_in)) {
            return Err(Error::invalid("Kraus operators must share one shape"));
        }
        let mut sum = DMatrix::<f64>::zeros(dim_in, dim_in);
        for k in &operators {
            sum += k.transpose() * k;
        }
        let err = (sum - DMatrix::<f64>::identity(dim_in, dim_in)).amax();
        if err > TRACE_PRESERVING_TOL {
            return Err(Error::invalid(format!(
                "Kraus operators are not trace preserving (deviation {err:e})"
            )));
        }
        Ok(KrausChannel { operators })
    }

    pub fn operators(&self) -> &[DMatrix<f64>] {
        &self.operators
    }

    pub fn dim_in(&self) -> usize {
        self.operators[0].ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.operators[0].nrows()
    }
}

pub fn apply_channel(ch: &KrausChannel, m: &SymMatrix) -> Result<SymMatrix> {
    if m.dim() != ch.dim_in() {
        return Err(Error::invalid(format!(
            "channel expects dimension {}, got {}",
            ch.dim_in(),
            m.dim()
        )));
    }
    let mut out = DMatrix::zeros(ch.dim_out(), ch.dim_out());
    for k in &ch.operators {
        out += k * m.as_matrix() * k.transpose();
    }
    SymMatrix::new(out)
}

/// Random channel from a Haar-like isometry: a seeded Gaussian
/// `(dim_out·n_kraus) × dim_in` matrix is orthonormalized by QR and cut
/// into `n_kraus` row blocks.
pub fn random_channel(dim_in: usize, dim_out: usize, n_kraus: usize, seed: u64) -> Result<KrausChannel> {
    if dim_in == 0 || dim_out == 0 || n_kraus == 0 {
        return Err(Error::invalid("channel dimensions and Kraus count must be >= 1"));
    }
    let rows = dim_out * n_kraus;
    if rows < dim_in {
        return Err(Error::invalid(format!(
            "no isometry from dimension {dim_in} into {rows}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(rows, dim_in, |_, _| StandardNormal.sample(&mut rng));
    let q = g.qr().q();
    let operators = (0..n_kraus)
        .map(|k| q.rows(k * dim_out, dim_out).into_owned())
        .collect();
    KrausChannel::new(operators)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn diag(v: &[f64]) -> SymMatrix {
        SymMatrix::from_diagonal(v)
    }

    fn pair(a: SymMatrix, b: SymMatrix) -> PsdPair {
        PsdPair::new(a, b).unwrap()
    }

    fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::new(&g * g.transpose()).unwrap()
    }

    #[test]
    fn identical_states_have_zero_divergence() {
        let p = pair(diag(&[0.5, 0.5]), diag(&[0.5, 0.5]));
        assert_abs_diff_eq!(qrd(&p, 2.0).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn normalization_scalar_case() {
        let p = pair(diag(&[1.0]), diag(&[0.5]));
        assert_abs_diff_eq!(qrd(&p, 2.0).unwrap(), std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(qrd_reg(&p, 2.0, 0.1).unwrap(), -(0.6f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn regularization_zero_is_plain_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = pair(random_psd(3, &mut rng), random_psd(3, &mut rng).shifted(0.1));
        assert_eq!(qrd(&p, 2.5).unwrap(), qrd_reg(&p, 2.5, 0.0).unwrap());
    }

    #[test]
    fn dominated_state_is_non_positive() {
        let p = pair(diag(&[0.3, 0.3]), diag(&[0.5, 0.5]));
        assert!(qrd_reg(&p, 2.0, 0.2).unwrap() <= 0.0);
    }

    #[test]
    fn dual_path_oracle() {
        // second path: B^β through spectral_apply instead of the support-aware code
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a0 = random_psd(3, &mut rng);
        let a = SymMatrix::new(a0.as_matrix() / a0.trace()).unwrap();
        let b = random_psd(3, &mut rng).shifted(0.3);
        let alpha = 2.5;
        let beta = (1.0 - alpha) / (2.0 * alpha);
        let s = spectral::spectral_apply(&b, |t| t.powf(beta), true).unwrap();
        let m = SymMatrix::new(s.as_matrix() * a.as_matrix() * s.as_matrix()).unwrap();
        let eig = nalgebra::SymmetricEigen::new(m.into_inner());
        let tr: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0).powf(alpha)).sum();
        let oracle = tr.ln() / (alpha - 1.0);
        let got = qrd(&pair(a, b), alpha).unwrap();
        assert!((got - oracle).abs() < 1e-12);
    }

    #[test]
    fn leaking_into_kernel_is_infinite() {
        let p = pair(diag(&[0.5, 0.5]), diag(&[1.0, 0.0]));
        assert_eq!(qrd(&p, 2.0).unwrap(), f64::INFINITY);
        // α < 1 stays finite
        assert!(qrd(&p, 0.6).unwrap().is_finite());
        // regularization removes the kernel
        assert!(qrd_reg(&p, 2.0, 1e-3).unwrap().is_finite());
        // no mass in the kernel: finite
        let q = pair(diag(&[1.0, 0.0]), diag(&[0.5, 0.0]));
        assert_abs_diff_eq!(qrd(&q, 2.0).unwrap(), std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn order_one_rejected() {
        let p = pair(diag(&[1.0]), diag(&[1.0]));
        assert!(matches!(qrd(&p, 1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(qrd_reg(&p, 2.0, -1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pair_validation() {
        assert!(matches!(
            PsdPair::new(diag(&[1.0, -0.5]), diag(&[1.0, 1.0])),
            Err(Error::NotPsd { .. })
        ));
        assert!(PsdPair::new(diag(&[0.0]), diag(&[1.0])).is_err());
        assert!(PsdPair::new(diag(&[1.0]), diag(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn identity_channel_is_noop() {
        let ch = KrausChannel::new(vec![DMatrix::identity(2, 2)]).unwrap();
        let m = SymMatrix::from_row_major(2, &[0.7, 0.1, 0.1, 0.3]).unwrap();
        assert_eq!(apply_channel(&ch, &m).unwrap(), m);
    }

    #[test]
    fn pinching_fixes_diagonal_states() {
        let e0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e1 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let ch = KrausChannel::new(vec![e0, e1]).unwrap();
        let m = diag(&[0.2, 0.8]);
        assert_eq!(apply_channel(&ch, &m).unwrap(), m);
    }

    #[test]
    fn random_channel_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_psd(3, &mut rng);
        let ch = random_channel(3, 2, 3, 99).unwrap();
        let out = apply_channel(&ch, &m).unwrap();
        assert!((out.trace() - m.trace()).abs() < 1e-9);
        assert_eq!(out.dim(), 2);
    }

    #[test]
    fn random_channel_examples() {
        let ch = random_channel(1, 1, 1, 5).unwrap();
        assert_abs_diff_eq!(ch.operators()[0][(0, 0)].abs(), 1.0, epsilon = 1e-15);
        let a = random_channel(2, 2, 2, 7).unwrap();
        let b = random_channel(2, 2, 2, 7).unwrap();
        assert_eq!(a.operators(), b.operators());
        assert!(matches!(random_channel(4, 1, 2, 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn apply_channel_dimension_mismatch() {
        let ch = random_channel(2, 2, 1, 1).unwrap();
        assert!(apply_channel(&ch, &diag(&[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn small_perturbations_move_divergence_little() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = random_psd(3, &mut rng);
            let b = random_psd(3, &mut rng).shifted(0.05);
            let da = SymMatrix::new(DMatrix::from_fn(3, 3, |_, _| rng.random_range(-5e-7..5e-7))).unwrap();
            let db = SymMatrix::new(DMatrix::from_fn(3, 3, |_, _| rng.random_range(-5e-7..5e-7))).unwrap();
            let a2 = SymMatrix::new(a.as_matrix() + da.as_matrix()).unwrap();
            let b2 = SymMatrix::new(b.as_matrix() + db.as_matrix()).unwrap();
            for alpha in [0.6, 2.0, 6.0] {
                let d1 = qrd_reg(&pair(a.clone(), b.clone()), alpha, 1e-2).unwrap();
                let d2 = qrd_reg(&pair(a2.clone(), b2.clone()), alpha, 1e-2).unwrap();
                assert!((d1 - d2).abs() <= 1e-3, "alpha {alpha}: {d1} vs {d2}");
            }
        }
    }
}
