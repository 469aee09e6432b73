//! Dense spectral routines.
//!
//! Everything downstream (divergences, Gram-matrix statistics) reduces to
//! eigendecompositions of small dense real matrices. Symmetric inputs go
//! through [`sym_eig`]; the non-symmetric block matrices used by the
//! cross-check route go through [`general_eigvals`] / [`general_eig`].
//!
//! Eigenvalues are always reported in descending order. Numerically PSD
//! inputs are cleaned up by clamping: an eigenvalue `μ` with
//! `-ε ≤ μ < 0`, where `ε = 1e-10 · max μ`, is treated as exactly zero.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Relative clamping tolerance, scaled by the largest eigenvalue.
pub const CLAMP_REL_TOL: f64 = 1e-10;

/// Allowed imaginary part (relative to `1 + |re|`) before a spectrum that
/// should be real is declared broken.
pub const IMAG_TOL: f64 = 1e-7;

/// Eigenvalues closer than this (relative to the spectral radius) are merged
/// into one eigenspace by [`general_eig`]. Kept tight: merging `θ` with
/// `θ + δ` evaluates `f` at the wrong point for the merged directions.
pub const CLUSTER_REL_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100_000;

/// A real symmetric matrix. Symmetry is exact: the constructor replaces the
/// input by `(M + Mᵀ) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(SymMatrix(s))
    }

    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self + shift · I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        SymMatrix(m)
    }

    /// `U · self · Uᵀ` for a square `U` of matching size.
    pub fn conjugate(&self, u: &DMatrix<f64>) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(Error::invalid("conjugating matrix has wrong width"));
        }
        Self::new(u * &self.0 * u.transpose())
    }
}

/// Eigen-pairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Clamping tolerance `ε = 1e-10 · max μ` (zero when the top eigenvalue
    /// is not positive).
    pub fn clamp_tolerance(&self) -> f64 {
        CLAMP_REL_TOL * self.max_value().max(0.0)
    }

    /// Eigenvalues with tiny negatives set to zero. Fails with `NotPsd` if an
    /// eigenvalue lies below `-ε`.
    pub fn clamped_values(&self) -> Result<Vec<f64>> {
        let tol = self.clamp_tolerance();
        self.values
            .iter()
            .map(|&mu| {
                if mu >= 0.0 {
                    Ok(mu)
                } else if mu >= -tol {
                    Ok(0.0)
                } else {
                    Err(Error::NotPsd {
                        eigenvalue: mu,
                        tolerance: tol,
                    })
                }
            })
            .collect()
    }

    /// `V diag(g) Vᵀ` for the given diagonal.
    pub fn compose(&self, diag: &[f64]) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, &g) in diag.iter().enumerate() {
            scaled.column_mut(j).scale_mut(g);
        }
        scaled * self.vectors.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.compose(&self.values)
    }
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Symmetric eigendecomposition with eigenvalues sorted descending.
pub fn sym_eig(m: &SymMatrix) -> Result<Spectrum> {
    if !m.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let eig = to_faer(m.as_matrix())
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    let (s, u) = (eig.S(), eig.U());
    let n = m.dim();
    // solver order is ascending
    let values = (0..n).rev().map(|i| s[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok(Spectrum { values, vectors })
}

/// Eigenvalues only, descending. Cheaper than [`sym_eig`].
pub fn sym_eigvals(m: &SymMatrix) -> Result<Vec<f64>> {
    if !m.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let mut values = to_faer(m.as_matrix())
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    values.reverse();
    Ok(values)
}

/// Applies a scalar function through the spectrum: `V diag(f(μ)) Vᵀ`.
///
/// With `clamp_negatives` set, eigenvalues are clamped first and anything
/// below `-ε` is rejected as `NotPsd`; use it whenever `f` is undefined on
/// negative arguments (fractional powers, logarithms).
pub fn spectral_apply<F>(m: &SymMatrix, f: F, clamp_negatives: bool) -> Result<SymMatrix>
where
    F: Fn(f64) -> f64,
{
    let spec = sym_eig(m)?;
    let mu = if clamp_negatives {
        spec.clamped_values()?
    } else {
        spec.values.clone()
    };
    let g: Vec<f64> = mu.into_iter().map(f).collect();
    SymMatrix::new(spec.compose(&g))
}

/// `Σ clamp(μ_i)^α` with the convention `0^α = 0`.
pub fn trace_power(m: &SymMatrix, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("trace power needs alpha > 0, got {alpha}")));
    }
    let spec = sym_eig(m)?;
    Ok(power_sum(&spec.clamped_values()?, alpha))
}

pub(crate) fn power_sum(values: &[f64], alpha: f64) -> f64 {
    values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v.powf(alpha))
        .sum()
}

fn schur_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::invalid(format!(
            "eigenvalues need a square non-empty matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    // nalgebra's Schur iteration stalls on the highly repeated eigenvalues of
    // the block Gram matrices; faer's implicit QR handles them.
    let values = to_faer(m)
        .eigenvalues()
        .map_err(|e| Error::numerical(format!("non-symmetric eigensolver failed: {e:?}")))?;
    Ok(values.iter().map(|z| (z.re, z.im)).collect())
}

/// Eigenvalues of a general square matrix whose spectrum is known to be real
/// (e.g. similar to a self-adjoint operator). Imaginary parts are dropped
/// after checking `|Im| ≤ 1e-7 · (1 + |Re|)`; larger ones are reported as a
/// `NumericalFailure`. Sorted descending.
pub fn general_eigvals(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(m.nrows());
    for (re, im) in schur_eigenvalues(m)? {
        if im.abs() > IMAG_TOL * (1.0 + re.abs()) {
            return Err(Error::numerical(format!(
                "eigenvalue {re:e} + {im:e}i is not real within tolerance"
            )));
        }
        values.push(re);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Eigendecomposition `A = V diag(θ) V⁻¹` of a diagonalizable matrix with real
/// spectrum.
#[derive(Debug, Clone)]
pub struct GeneralEigen {
    /// Eigenvalues descending; members of a cluster share its mean value.
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// `(mean, multiplicity)` runs of a descending spectrum whose consecutive
/// gaps are at most `CLUSTER_REL_TOL` times the spectral radius.
fn clusters(values: &[f64]) -> Vec<(f64, usize)> {
    let n = values.len();
    let radius = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tol = CLUSTER_REL_TOL * radius;
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || values[i - 1] - values[i] > tol {
            let run = &values[start..i];
            out.push((run.iter().sum::<f64>() / run.len() as f64, run.len()));
            start = i;
        }
    }
    out
}

/// Orthonormal basis (as columns) of the `mult`-dimensional near-null space
/// of `m − θI`, read off the right-singular vectors with the smallest
/// singular values.
fn null_basis(m: &DMatrix<f64>, theta: f64, mult: usize) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= theta;
    }
    let svd = SVD::try_new_unordered(shifted, false, true, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::numerical("SVD did not converge"))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::numerical("SVD returned no right-singular vectors"))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut basis = DMatrix::zeros(n, mult);
    for (k, &row) in idx.iter().take(mult).enumerate() {
        basis.set_column(k, &v_t.row(row).transpose());
    }
    Ok(basis)
}

fn check_eigenspace(m: &DMatrix<f64>, basis: &DMatrix<f64>, theta: f64) -> Result<()> {
    let residual = (m * basis - basis * theta).amax();
    if residual > 1e-6 * m.amax().max(1.0) {
        return Err(Error::numerical(format!(
            "eigenbasis residual {residual:e} too large; matrix may be defective"
        )));
    }
    Ok(())
}

/// Eigenvalues are clustered (gap ≤ `CLUSTER_REL_TOL` · spectral radius) and
/// each cluster's eigenspace is read off the right-singular vectors of
/// `A − θI` with the smallest singular values. This handles the highly
/// repeated eigenvalues of the block Gram matrices, where triangular
/// back-substitution breaks down.
pub fn general_eig(m: &DMatrix<f64>) -> Result<GeneralEigen> {
    let n = m.nrows();
    let values = general_eigvals(m)?;
    let mut vectors = DMatrix::zeros(n, n);
    let mut merged = Vec::with_capacity(n);
    for (theta, mult) in clusters(&values) {
        let basis = null_basis(m, theta, mult)?;
        vectors.columns_mut(merged.len(), mult).copy_from(&basis);
        merged.extend(std::iter::repeat_n(theta, mult));
    }

    // the assembled basis must actually diagonalize m
    let residual = m * &vectors - &vectors * DMatrix::from_diagonal(&DVector::from_column_slice(&merged));
    let scale = m.amax().max(1.0);
    if residual.amax() > 1e-6 * scale {
        return Err(Error::numerical(format!(
            "eigenbasis residual {:e} too large; matrix may be defective",
            residual.amax()
        )));
    }
    Ok(GeneralEigen {
        values: merged,
        vectors,
    })
}

/// `f(A)` for a diagonalizable `A` with real spectrum.
///
/// Written as `f(θ_r) I + Σ_c (f(θ_c) − f(θ_r)) P_c`, where `θ_r` is the
/// eigenvalue of largest multiplicity and `P_c = V_c (W_cᵀ V_c)⁻¹ W_cᵀ` is the
/// spectral projector built from right and left eigenbases. Compared with
/// `V f(Θ) V⁻¹` this never inverts the full (often ill-conditioned)
/// eigenvector matrix, and the projectors of eigenvalues close to `θ_r` only
/// enter through the small differences `f(θ_c) − f(θ_r)`.
pub fn general_apply<F>(m: &DMatrix<f64>, f: F) -> Result<DMatrix<f64>>
where
    F: Fn(f64) -> f64,
{
    let n = m.nrows();
    let values = general_eigvals(m)?;
    let cl = clusters(&values);
    let reference = (0..cl.len())
        .max_by_key(|&i| (cl[i].1, std::cmp::Reverse(i)))
        .expect("non-empty spectrum");
    let (theta_r, mult_r) = cl[reference];
    check_eigenspace(m, &null_basis(m, theta_r, mult_r)?, theta_r)?;

    let f_r = f(theta_r);
    let m_t = m.transpose();
    let mut out = DMatrix::identity(n, n) * f_r;
    for (i, &(theta, mult)) in cl.iter().enumerate() {
        if i == reference {
            continue;
        }
        let right = null_basis(m, theta, mult)?;
        check_eigenspace(m, &right, theta)?;
        let left = null_basis(&m_t, theta, mult)?;
        let overlap = left.transpose() * &right;
        let coupling = overlap
            .lu()
            .solve(&left.transpose())
            .ok_or_else(|| Error::numerical("left and right eigenspaces are orthogonal; matrix is defective"))?;
        out += (right * coupling) * (f(theta) - f_r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::new(m).unwrap()
    }

    fn random_psd(n: usize, seed: u64, shift: f64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::new(&g * g.transpose()).unwrap().shifted(shift)
    }

    #[test]
    fn identity_spectrum() {
        let s = sym_eig(&SymMatrix::identity(2)).unwrap();
        assert_eq!(s.values, vec![1.0, 1.0]);
        let vtv = s.vectors.transpose() * &s.vectors;
        assert!((vtv - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn diagonal_spectrum_is_descending() {
        let s = sym_eig(&SymMatrix::from_diagonal(&[1.0, 2.0])).unwrap();
        assert_eq!(s.values, vec![2.0, 1.0]);
    }

    #[test]
    fn random_reconstruction() {
        let m = random_sym(5, 11);
        let s = sym_eig(&m).unwrap();
        let err = (s.reconstruct() - m.as_matrix()).amax();
        assert!(err <= 1e-8 * m.max_abs().max(1.0));
        let vtv = s.vectors.transpose() * &s.vectors;
        assert!((vtv - DMatrix::identity(5, 5)).amax() <= 1e-10);
        assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_non_finite() {
        let m = SymMatrix::from_row_major(2, &[1.0, f64::NAN, f64::NAN, 1.0]).unwrap();
        assert!(matches!(sym_eig(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn constructor_symmetrizes() {
        let m = SymMatrix::from_row_major(2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert_eq!(m.as_matrix()[(0, 1)], 1.0);
        assert_eq!(m.as_matrix()[(1, 0)], 1.0);
    }

    #[test]
    fn apply_identity_function() {
        let m = random_sym(4, 3);
        let out = spectral_apply(&m, |t| t, false).unwrap();
        assert!((out.as_matrix() - m.as_matrix()).amax() < 1e-8);
    }

    #[test]
    fn apply_square_root_on_diagonal() {
        let m = SymMatrix::from_diagonal(&[4.0, 9.0]);
        let out = spectral_apply(&m, f64::sqrt, true).unwrap();
        assert_abs_diff_eq!(out.as_matrix()[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.as_matrix()[(1, 1)], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.as_matrix()[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn apply_negative_quarter_power_matches_direct_route() {
        let m = random_psd(4, 5, 0.5);
        let out = spectral_apply(&m, |t| t.powf(-0.25), true).unwrap();
        // oracle: nalgebra's unsorted decomposition composed by hand
        let eig = SymmetricEigen::new(m.as_matrix().clone());
        let d = eig.eigenvalues.map(|v| v.powf(-0.25));
        let oracle = &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose();
        assert!((out.as_matrix() - oracle).amax() < 1e-10);
    }

    #[test]
    fn clamping_rejects_clearly_negative_eigenvalue() {
        let m = SymMatrix::from_diagonal(&[1.0, -1e-3]);
        assert!(matches!(
            spectral_apply(&m, f64::sqrt, true),
            Err(Error::NotPsd { .. })
        ));
        let tiny = SymMatrix::from_diagonal(&[1.0, -1e-12]);
        let out = spectral_apply(&tiny, f64::sqrt, true).unwrap();
        assert_eq!(out.as_matrix()[(1, 1)], 0.0);
    }

    #[test]
    fn trace_power_examples() {
        assert_abs_diff_eq!(trace_power(&SymMatrix::identity(3), 2.0).unwrap(), 3.0);
        assert_abs_diff_eq!(
            trace_power(&SymMatrix::from_diagonal(&[0.5, 0.5]), 2.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let m = random_psd(5, 8, 0.0);
        let eig = SymmetricEigen::new(m.as_matrix().clone());
        let oracle: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0).powf(2.7)).sum();
        let got = trace_power(&m, 2.7).unwrap();
        assert!((got - oracle).abs() <= 1e-10 * oracle);
    }

    #[test]
    fn trace_power_one_is_trace() {
        let m = random_psd(6, 21, 0.1);
        assert!((trace_power(&m, 1.0).unwrap() - m.trace()).abs() < 1e-10);
    }

    #[test]
    fn general_eigvals_of_triangular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 2.0]);
        let v = general_eigvals(&m).unwrap();
        assert_abs_diff_eq!(v[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn general_eigvals_match_symmetric_solver() {
        let m = random_sym(6, 4);
        let a = general_eigvals(m.as_matrix()).unwrap();
        let b = sym_eig(&m).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn general_eigvals_rejects_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(general_eigvals(&m), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn general_apply_handles_repeated_eigenvalues() {
        // [[λI, 0], [C, D]] with D symmetric positive: eigenvalue λ repeated
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 4;
        let d = random_psd(n, 10, 0.3);
        let mut t = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            t[(i, i)] = 0.2;
            for j in 0..n {
                t[(n + i, j)] = rng.random_range(-0.5..0.5);
                t[(n + i, n + j)] = d.as_matrix()[(i, j)] + if i == j { 0.2 } else { 0.0 };
            }
        }
        let sq = general_apply(&t, f64::sqrt).unwrap();
        assert!((&sq * &sq - &t).amax() < 1e-10);
    }

    #[test]
    fn general_apply_matches_symmetric_route() {
        let m = random_psd(5, 13, 0.2);
        let a = general_apply(m.as_matrix(), |t| t.powf(-0.3)).unwrap();
        let b = spectral_apply(&m, |t| t.powf(-0.3), true).unwrap();
        assert!((a - b.as_matrix()).amax() < 1e-9);
    }

    #[test]
    fn eigvals_only_matches_full_decomposition() {
        let m = random_sym(9, 21);
        let full = sym_eig(&m).unwrap().values;
        let only = sym_eigvals(&m).unwrap();
        for (a, b) in full.iter().zip(&only) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert!(only.windows(2).all(|w| w[0] >= w[1]));
    }
}
