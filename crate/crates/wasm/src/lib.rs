//! Browser entry points. Each operation returns a JSON string.
//!
//! The `*_json` functions hold the logic and are callable natively; the
//! exported wrappers only convert errors into JavaScript exceptions.

use rkrd::audit::{run_audit, AuditClaim, ClaimKind};
use rkrd::experiment::lambda_grid;
use rkrd::io::parse_csv;
use rkrd::kernels::KernelSpec;
use rkrd::mechanisms::{calibrate_sigma, classic_sigma, gaussian_renyi, GaussianMechanism, Which};
use rkrd::estimator::GridEstimator;
use serde_json::json;
use wasm_bindgen::prelude::*;

const ALPHAS: [f64; 3] = [2.0, 6.0, 12.0];
/// Keeps the page responsive.
pub const MAX_SAMPLES: usize = 1000;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Noise scale for an `(ε, δ)` target plus the matching Rényi reference lines.
pub fn calibrate_json(epsilon: f64, delta: f64, sensitivity: f64) -> Result<String, String> {
    let sigma = calibrate_sigma(epsilon, delta, sensitivity).map_err(fail)?;
    let renyi: Vec<_> = ALPHAS
        .iter()
        .map(|&a| json!({"alpha": a, "renyi": gaussian_renyi(a, sensitivity, sigma)}))
        .collect();
    Ok(json!({
        "sigma": sigma,
        "classic_sigma": classic_sigma(epsilon, delta, sensitivity),
        "lambda0": delta * (-epsilon).exp(),
        "renyi": renyi,
    })
    .to_string())
}

/// Estimated curve over a log-spaced `λ` grid for one Gaussian-mechanism draw.
pub fn gaussian_curve_json(
    sensitivity: f64,
    sigma: f64,
    dim: usize,
    n: usize,
    alpha: f64,
    points: usize,
    seed: u64,
) -> Result<String, String> {
    if n > MAX_SAMPLES {
        return Err(format!("at most {MAX_SAMPLES} samples per side in the browser"));
    }
    if !(2..=60).contains(&points) {
        return Err("grid size must lie in 2..=60".into());
    }
    let mech = GaussianMechanism::with_sensitivity(dim, sensitivity, sigma, seed).map_err(fail)?;
    let xs = mech.sample(Which::D, n).map_err(fail)?;
    let ys = mech.sample(Which::DPrime, n).map_err(fail)?;
    let grid = GridEstimator::new(&KernelSpec::rbf_median(), &xs, &ys).map_err(fail)?;
    let lambdas = lambda_grid(points);
    let values = lambdas
        .iter()
        .map(|&l| grid.estimate(alpha, l).map(|e| e.value))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(fail)?;
    Ok(json!({
        "lambda": lambdas,
        "value": values,
        "renyi": gaussian_renyi(alpha, sensitivity, sigma),
        "bandwidth": grid.kernel().bandwidth,
    })
    .to_string())
}

/// `(ε, δ)` audit of two pasted CSV sample sets. `bandwidth <= 0` selects the median rule.
pub fn audit_text_json(
    p_csv: &str,
    q_csv: &str,
    epsilon: f64,
    delta: f64,
    alpha: f64,
    bandwidth: f64,
) -> Result<String, String> {
    let xs = parse_csv(p_csv).map_err(|e| format!("first sample set: {e}"))?;
    let ys = parse_csv(q_csv).map_err(|e| format!("second sample set: {e}"))?;
    if xs.n().max(ys.n()) > MAX_SAMPLES {
        return Err(format!("at most {MAX_SAMPLES} samples per side in the browser"));
    }
    let spec = if bandwidth > 0.0 {
        KernelSpec::rbf(bandwidth)
    } else {
        KernelSpec::rbf_median()
    };
    let claim = AuditClaim {
        kind: ClaimKind::EpsDeltaDp,
        epsilon,
        delta: Some(delta),
        alpha,
        lambda: None,
        level_x0: 0.05,
    };
    let r = run_audit(&claim, &spec, &xs, &ys).map_err(fail)?;
    Ok(json!({
        "statistic": r.statistic,
        "threshold": r.threshold,
        "b_n": r.bound.b_n,
        "valid": r.bound.valid,
        "validity_reason": r.bound.validity_reason,
        "lambda": r.lambda_used,
        "bandwidth": r.bandwidth,
        "n_p": r.n_p,
        "n_q": r.n_q,
        "decision": r.decision.as_str(),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn calibrate(epsilon: f64, delta: f64, sensitivity: f64) -> Result<String, JsError> {
    calibrate_json(epsilon, delta, sensitivity).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn gaussian_curve(
    sensitivity: f64,
    sigma: f64,
    dim: usize,
    n: usize,
    alpha: f64,
    points: usize,
    seed: u32,
) -> Result<String, JsError> {
    gaussian_curve_json(sensitivity, sigma, dim, n, alpha, points, seed as u64)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn audit_text(
    p_csv: &str,
    q_csv: &str,
    epsilon: f64,
    delta: f64,
    alpha: f64,
    bandwidth: f64,
) -> Result<String, JsError> {
    audit_text_json(p_csv, q_csv, epsilon, delta, alpha, bandwidth).map_err(|e| JsError::new(&e))
}
