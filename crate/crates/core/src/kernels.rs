//! Sample sets, kernels with `k(x, x) = 1`, and Gram-block construction.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` draws of a `d`-dimensional mechanism output, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!("sample set must be non-empty, got {n}x{d}")));
        }
        if data.len() != n * d {
            return Err(Error::invalid(format!(
                "expected {} values for {n} samples of dimension {d}, got {}",
                n * d,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value in sample {} coordinate {}",
                i / d,
                i % d
            )));
        }
        Ok(SampleSet { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::invalid(format!(
                "row {i} has {} values, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn pooled(&self, other: &SampleSet) -> Result<SampleSet> {
        check_same_dim(self, other)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        SampleSet::new(self.n + other.n, self.d, data)
    }

    /// Rows reordered by `perm` (row `i` of the result is row `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<SampleSet> {
        if perm.len() != self.n {
            return Err(Error::invalid("permutation length must equal sample count"));
        }
        let data = perm.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        SampleSet::new(self.n, self.d, data)
    }
}

fn check_same_dim(x: &SampleSet, y: &SampleSet) -> Result<()> {
    if x.d != y.d {
        return Err(Error::invalid(format!(
            "sample dimension mismatch: {} vs {}",
            x.d, y.d
        )));
    }
    Ok(())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median heuristic: `sqrt` of the (lower) median pairwise squared distance
/// over all unordered pairs. Falls back to 1.0 when that median is zero.
pub fn median_bandwidth(pooled: &SampleSet) -> Result<f64> {
    let n = pooled.n();
    if n < 2 {
        return Err(Error::invalid("median bandwidth needs at least two samples"));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let xi = pooled.row(i);
        for j in (i + 1)..n {
            dists.push(squared_distance(xi, pooled.row(j)));
        }
    }
    let mid = (dists.len() - 1) / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let h = median.sqrt();
    Ok(if h > 0.0 { h } else { 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `exp(-‖x − y‖² / h²)`
    Rbf,
    /// `∏_j exp(-(x_j − y_j)² / h²)`
    ProductRbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthPolicy {
    Fixed(f64),
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: BandwidthPolicy,
}

impl KernelSpec {
    pub fn rbf_median() -> Self {
        KernelSpec {
            family: KernelFamily::Rbf,
            bandwidth: BandwidthPolicy::Median,
        }
    }

    pub fn rbf(h: f64) -> Self {
        KernelSpec {
            family: KernelFamily::Rbf,
            bandwidth: BandwidthPolicy::Fixed(h),
        }
    }

    /// Fixes the bandwidth, pooling both sample sets for the median rule so
    /// that `p` and `q` share one kernel.
    pub fn resolve(&self, xs: &SampleSet, ys: &SampleSet) -> Result<Kernel> {
        check_same_dim(xs, ys)?;
        let h = match self.bandwidth {
            BandwidthPolicy::Fixed(h) => {
                if !(h > 0.0) || !h.is_finite() {
                    return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
                }
                h
            }
            BandwidthPolicy::Median => median_bandwidth(&xs.pooled(ys)?)?,
        };
        Ok(Kernel {
            family: self.family,
            bandwidth: h,
        })
    }
}

/// A kernel with its bandwidth resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let h2 = self.bandwidth * self.bandwidth;
        match self.family {
            KernelFamily::Rbf => (-squared_distance(a, b) / h2).exp(),
            KernelFamily::ProductRbf => a
                .iter()
                .zip(b)
                .map(|(x, y)| (-(x - y) * (x - y) / h2).exp())
                .product(),
        }
    }
}

/// Gram block `[k(x_i, y_j)]`.
pub fn gram(kernel: &Kernel, x: &SampleSet, y: &SampleSet) -> Result<DMatrix<f64>> {
    check_same_dim(x, y)?;
    Ok(DMatrix::from_fn(x.n(), y.n(), |i, j| kernel.eval(x.row(i), y.row(j))))
}

/// Gram matrix of one sample set; symmetric with unit diagonal exactly.
pub fn gram_self(kernel: &Kernel, x: &SampleSet) -> DMatrix<f64> {
    let n = x.n();
    let mut k = DMatrix::identity(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            let v = kernel.eval(x.row(i), x.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}
