use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use rkrd::audit::{run_audit, AuditClaim, ClaimKind, Decision};
use rkrd::estimator::{estimate_block, GridEstimator, RkrdEstimate};
use rkrd::io::{format_f64, read_samples, samples_to_csv, samples_to_json, SampleFormat};
use rkrd::kernels::{KernelSpec, SampleSet};
use rkrd::mechanisms::{
    balle_condition, calibrate_sigma, classic_sigma, gaussian_renyi, GaussianMechanism, Which,
};
use serde_json::json;

use crate::error::CliError;
use crate::report::ReportJson;
use crate::{
    AuditArgs, CalibrateArgs, ClaimArg, EstimateArgs, FormatArg, MechanismArgs, MethodArg,
    VerifyArgs, EXIT_OK, EXIT_REJECT,
};

/// Sigma used when the sensitivity is zero and none is given.
const NULL_SIGMA: f64 = 0.01;

pub fn load(path: &Path) -> Result<SampleSet, CliError> {
    read_samples(path, SampleFormat::from_path(path)).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn unix_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn kernel_json(spec: &KernelSpec) -> serde_json::Value {
    serde_json::to_value(spec).unwrap_or(serde_json::Value::Null)
}

fn estimate_csv(rows: &[RkrdEstimate]) -> String {
    let mut out = String::from("alpha,lambda,n,value,bandwidth,method\n");
    for r in rows {
        let method = match r.method {
            rkrd::estimator::Method::Symmetric => "symmetric",
            rkrd::estimator::Method::Block => "block",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_f64(r.alpha),
            format_f64(r.lambda),
            r.n_p,
            format_f64(r.value),
            format_f64(r.bandwidth),
            method
        ));
    }
    out
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

pub fn estimate(a: &EstimateArgs) -> Result<u8, CliError> {
    let xs = load(&a.samples.p_samples)?;
    let ys = load(&a.samples.q_samples)?;
    let spec = a.kernel.spec();
    let grid: Vec<(f64, f64)> = a
        .alpha
        .iter()
        .flat_map(|&al| a.lambda.iter().map(move |&l| (al, l)))
        .collect();

    let rows: Vec<RkrdEstimate> = match a.method {
        MethodArg::Symmetric => {
            let est = GridEstimator::new(&spec, &xs, &ys)?;
            grid.par_iter()
                .map(|&(al, l)| est.estimate(al, l))
                .collect::<Result<_, _>>()?
        }
        MethodArg::Block => grid
            .par_iter()
            .map(|&(al, l)| estimate_block(&spec, &xs, &ys, al, l))
            .collect::<Result<_, _>>()?,
    };

    let csv = estimate_csv(&rows);
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": unix_time(),
        "seed": a.seed,
        "kernel": kernel_json(&spec),
        "p_samples": a.samples.p_samples,
        "q_samples": a.samples.q_samples,
        "n_p": xs.n(),
        "n_q": ys.n(),
        "rows": rows,
    });
    let json_text = format!("{}\n", serde_json::to_string_pretty(&doc)?);

    let (primary, secondary, other_ext) = match a.format {
        FormatArg::Csv => (&csv, &json_text, "json"),
        FormatArg::Json => (&json_text, &csv, "csv"),
    };
    match &a.out {
        Some(path) => {
            write_file(path, primary)?;
            let companion = with_extension(path, other_ext);
            if companion != *path {
                write_file(&companion, secondary)?;
            }
        }
        None => print!("{primary}"),
    }
    Ok(EXIT_OK)
}

pub fn audit(a: &AuditArgs) -> Result<u8, CliError> {
    let kind = match a.claim {
        ClaimArg::EpsDp => ClaimKind::EpsDp,
        ClaimArg::EpsDeltaDp => ClaimKind::EpsDeltaDp,
        ClaimArg::Rdp => ClaimKind::Rdp,
        ClaimArg::Rkrdp => ClaimKind::Rkrdp,
    };
    let claim = AuditClaim {
        kind,
        epsilon: a.epsilon,
        delta: a.delta,
        alpha: a.alpha,
        lambda: a.lambda,
        level_x0: a.level,
    };
    claim.validate()?;
    let xs = load(&a.samples.p_samples)?;
    let ys = load(&a.samples.q_samples)?;
    let report = run_audit(&claim, &a.kernel.spec(), &xs, &ys)?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    let text = format!(
        "{}\n",
        serde_json::to_string_pretty(&ReportJson::new(&report, a.seed))?
    );
    match &a.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    eprintln!(
        "{}: statistic {} vs threshold {}",
        report.decision.as_str(),
        report.statistic,
        report.threshold
    );
    Ok(exit_for(report.decision))
}

fn exit_for(d: Decision) -> u8 {
    match d {
        Decision::Reject => EXIT_REJECT,
        Decision::FailToReject => EXIT_OK,
    }
}

pub fn verify(a: &VerifyArgs) -> Result<u8, CliError> {
    let text = fs::read_to_string(&a.report).map_err(|source| CliError::Io {
        path: a.report.clone(),
        source,
    })?;
    let report: ReportJson = serde_json::from_str(&text)?;
    if report.threshold_mismatch() {
        return Err(CliError::Invalid(format!(
            "threshold {} differs from epsilon + b_n = {}",
            report.threshold,
            report.claim.epsilon + report.b_n
        )));
    }
    let decision = report.recomputed();
    if decision != report.decision {
        return Err(CliError::Invalid(format!(
            "stored decision {} but statistic and threshold give {}",
            report.decision.as_str(),
            decision.as_str()
        )));
    }
    println!("{}", decision.as_str());
    Ok(exit_for(decision))
}

pub fn mechanism(a: &MechanismArgs) -> Result<u8, CliError> {
    let (sigma, source) = match (a.sigma, a.epsilon, a.delta) {
        (Some(s), _, _) => (s, "given"),
        (None, Some(e), Some(d)) => (calibrate_sigma(e, d, a.sensitivity)?, "calibrated"),
        (None, None, None) if a.sensitivity == 0.0 => (NULL_SIGMA, "default"),
        _ => {
            return Err(CliError::Invalid(
                "give --sigma, or both --epsilon and --delta".into(),
            ))
        }
    };
    let mech = GaussianMechanism::with_sensitivity(a.dim, a.sensitivity, sigma, a.seed)?;
    let p = mech.sample(Which::D, a.n)?;
    let q = mech.sample(Which::DPrime, a.n)?;

    let ext = match a.format {
        FormatArg::Csv => "csv",
        FormatArg::Json => "json",
    };
    let p_path = a.out.join(format!("p.{ext}"));
    let q_path = a.out.join(format!("q.{ext}"));
    let meta = json!({
        "dim": a.dim,
        "sensitivity": a.sensitivity,
        "sigma": sigma,
        "sigma_source": source,
        "epsilon": a.epsilon,
        "delta": a.delta,
        "n": a.n,
        "seed": a.seed,
    });
    for (path, set, which) in [(&p_path, &p, "D"), (&q_path, &q, "D'")] {
        let text = match a.format {
            FormatArg::Csv => {
                let comments = vec![
                    format!("gaussian mechanism output on {which}"),
                    format!("sigma = {}", format_f64(sigma)),
                    format!("sensitivity = {}", format_f64(a.sensitivity)),
                    format!("seed = {}", a.seed),
                ];
                samples_to_csv(set, &comments)
            }
            FormatArg::Json => samples_to_json(set, Some(&meta)),
        };
        write_file(path, &text)?;
    }
    let mut manifest = meta;
    manifest["version"] = json!(env!("CARGO_PKG_VERSION"));
    manifest["p_samples"] = json!(p_path);
    manifest["q_samples"] = json!(q_path);
    write_file(
        &a.out.join("mechanism.json"),
        &format!("{}\n", serde_json::to_string_pretty(&manifest)?),
    )?;
    eprintln!("sigma = {sigma} ({source}); wrote {} and {}", p_path.display(), q_path.display());
    Ok(EXIT_OK)
}

pub fn calibrate(a: &CalibrateArgs) -> Result<u8, CliError> {
    let sigma = calibrate_sigma(a.epsilon, a.delta, a.sensitivity)?;
    let renyi: Vec<_> = a
        .alpha
        .iter()
        .map(|&al| json!({"alpha": al, "renyi": gaussian_renyi(al, a.sensitivity, sigma)}))
        .collect();
    let doc = json!({
        "epsilon": a.epsilon,
        "delta": a.delta,
        "sensitivity": a.sensitivity,
        "sigma": sigma,
        "condition_at_sigma": balle_condition(sigma, a.sensitivity, a.epsilon),
        "classic_sigma": classic_sigma(a.epsilon, a.delta, a.sensitivity),
        "lambda0": a.delta * (-a.epsilon).exp(),
        "renyi": renyi,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&doc)?);
    match &a.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}
