//! Audit report JSON.

use rkrd::audit::{decide, AuditReport, ClaimKind, Decision};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimJson {
    pub kind: ClaimKind,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub alpha: f64,
    /// The regularization actually used.
    pub lambda: f64,
    pub level_x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub claim: ClaimJson,
    pub statistic: f64,
    pub threshold: f64,
    pub b_n: f64,
    pub t: f64,
    pub ell: f64,
    pub valid: bool,
    pub validity_reason: String,
    pub bandwidth: f64,
    pub n_p: usize,
    pub n_q: usize,
    pub decision: Decision,
    pub seed: Option<u64>,
    pub version: String,
}

impl ReportJson {
    pub fn new(r: &AuditReport, seed: Option<u64>) -> Self {
        ReportJson {
            claim: ClaimJson {
                kind: r.claim.kind,
                epsilon: r.claim.epsilon,
                delta: r.claim.delta,
                alpha: r.claim.alpha,
                lambda: r.lambda_used,
                level_x0: r.claim.level_x0,
            },
            statistic: r.statistic,
            threshold: r.threshold,
            b_n: r.bound.b_n,
            t: r.bound.t,
            ell: r.bound.ell,
            valid: r.bound.valid,
            validity_reason: r.bound.validity_reason.clone(),
            bandwidth: r.bandwidth,
            n_p: r.n_p,
            n_q: r.n_q,
            decision: r.decision,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// Decision recomputed from the stored statistic and threshold.
    pub fn recomputed(&self) -> Decision {
        decide(self.statistic, self.threshold)
    }

    /// Stored threshold disagrees with `epsilon + b_n`.
    pub fn threshold_mismatch(&self) -> bool {
        self.threshold != self.claim.epsilon + self.b_n
    }
}
