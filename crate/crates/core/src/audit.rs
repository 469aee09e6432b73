//! One-sided hypothesis tests of privacy claims: reject when the RKRD
//! statistic exceeds `ε + B_n`.

use serde::{Deserialize, Serialize};

use crate::bounds::{bn_bound, bn_bound_unchecked, BoundResult};
use crate::error::{Error, Result};
use crate::estimator::GridEstimator;
use crate::kernels::{KernelSpec, SampleSet};

/// `λ` used for `rdp` and `eps_dp` claims that do not name one.
pub const DEFAULT_LAMBDA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    EpsDp,
    EpsDeltaDp,
    Rdp,
    Rkrdp,
}

impl ClaimKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClaimKind::EpsDp => "eps_dp",
            ClaimKind::EpsDeltaDp => "eps_delta_dp",
            ClaimKind::Rdp => "rdp",
            ClaimKind::Rkrdp => "rkrdp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditClaim {
    pub kind: ClaimKind,
    pub epsilon: f64,
    /// Only for `eps_delta_dp`.
    pub delta: Option<f64>,
    /// Order of the test statistic.
    pub alpha: f64,
    /// Required for `rkrdp`, optional for `rdp`/`eps_dp`, derived for
    /// `eps_delta_dp`.
    pub lambda: Option<f64>,
    pub level_x0: f64,
}

impl AuditClaim {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be finite and > 1, got {}", self.alpha)));
        }
        if !(self.level_x0 > 0.0 && self.level_x0 < 1.0) {
            return Err(Error::invalid(format!("level must lie in (0, 1), got {}", self.level_x0)));
        }
        match (self.kind, self.delta) {
            (ClaimKind::EpsDeltaDp, None) => {
                return Err(Error::invalid("eps_delta_dp claims need delta"));
            }
            (ClaimKind::EpsDeltaDp, Some(d)) if !(0.0..=1.0).contains(&d) => {
                return Err(Error::invalid(format!("delta must lie in [0, 1], got {d}")));
            }
            (ClaimKind::EpsDeltaDp, _) => {}
            (k, Some(_)) => {
                return Err(Error::invalid(format!("delta only applies to eps_delta_dp, not {}", k.as_str())));
            }
            _ => {}
        }
        match (self.kind, self.lambda) {
            (ClaimKind::Rkrdp, None) => Err(Error::invalid("rkrdp claims need lambda")),
            (ClaimKind::EpsDeltaDp, Some(_)) => Err(Error::invalid(
                "lambda is fixed to delta * exp(-epsilon) for eps_delta_dp claims",
            )),
            (_, Some(l)) if !(l > 0.0) || !l.is_finite() => {
                Err(Error::invalid(format!("lambda must be positive, got {l}")))
            }
            _ => Ok(()),
        }
    }
}

/// Regularization at which the claim implies an RKRDP guarantee, and whether
/// it came from [`DEFAULT_LAMBDA`].
pub fn resolve_lambda(claim: &AuditClaim) -> Result<(f64, bool)> {
    claim.validate()?;
    Ok(match claim.kind {
        ClaimKind::EpsDeltaDp => (claim.delta.unwrap_or(0.0) * (-claim.epsilon).exp(), false),
        ClaimKind::Rkrdp => (claim.lambda.unwrap_or(DEFAULT_LAMBDA), false),
        ClaimKind::Rdp | ClaimKind::EpsDp => match claim.lambda {
            Some(l) => (l, false),
            None => (DEFAULT_LAMBDA, true),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Reject => "reject",
            Decision::FailToReject => "fail_to_reject",
        }
    }
}

pub fn decide(statistic: f64, threshold: f64) -> Decision {
    if statistic > threshold {
        Decision::Reject
    } else {
        Decision::FailToReject
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub claim: AuditClaim,
    pub statistic: f64,
    pub threshold: f64,
    pub bound: BoundResult,
    pub decision: Decision,
    pub lambda_used: f64,
    pub bandwidth: f64,
    pub n_p: usize,
    pub n_q: usize,
    pub notes: Vec<String>,
}

/// Audits a claim on precomputed Gram data; several claims against one
/// sample pair can share the same [`GridEstimator`].
pub fn run_audit_on(grid: &GridEstimator, claim: &AuditClaim) -> Result<AuditReport> {
    let (lambda, defaulted) = resolve_lambda(claim)?;
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!(
            "resolved lambda is {lambda}; the finite-sample bound needs lambda > 0"
        )));
    }
    let alpha = claim.alpha;
    let estimate = grid.estimate(alpha, lambda)?;
    let stats = grid.spectral_stats(alpha)?;
    let n = grid.n_p().min(grid.n_q());

    let mut notes = vec![
        "plug-in bound: population spectral quantities replaced by empirical ones".to_string(),
    ];
    let mut bound = if alpha >= 2.0 {
        bn_bound(n, claim.level_x0, alpha, lambda, &stats)?
    } else {
        let mut b = bn_bound_unchecked(n, claim.level_x0, alpha, lambda, &stats)?;
        b.valid = false;
        let reason = format!("alpha = {alpha} is below 2, outside the bound's hypothesis");
        b.validity_reason = if b.validity_reason.is_empty() {
            reason
        } else {
            format!("{reason}; {}", b.validity_reason)
        };
        b
    };
    if !bound.valid {
        notes.push(format!(
            "threshold lacks the finite-sample guarantee: {}",
            bound.validity_reason
        ));
    }
    if defaulted {
        notes.push(format!("no lambda given; default lambda = {DEFAULT_LAMBDA} used"));
    }
    if claim.kind == ClaimKind::EpsDp {
        notes.push(format!(
            "eps-DP audited through the order-{alpha} statistic; alpha affects power, not validity"
        ));
    }
    if grid.n_p() != grid.n_q() {
        notes.push(format!("unequal sample counts; bound uses n = {n}"));
    }
    bound.x0 = claim.level_x0;

    let threshold = claim.epsilon + bound.b_n;
    Ok(AuditReport {
        claim: claim.clone(),
        statistic: estimate.value,
        threshold,
        decision: decide(estimate.value, threshold),
        bound,
        lambda_used: lambda,
        bandwidth: estimate.bandwidth,
        n_p: grid.n_p(),
        n_q: grid.n_q(),
        notes,
    })
}

pub fn run_audit(
    claim: &AuditClaim,
    spec: &KernelSpec,
    xs: &SampleSet,
    ys: &SampleSet,
) -> Result<AuditReport> {
    claim.validate()?;
    let grid = GridEstimator::new(spec, xs, ys)?;
    run_audit_on(&grid, claim)
}
