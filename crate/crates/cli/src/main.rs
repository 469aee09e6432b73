mod commands;
mod error;
mod figure;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rkrd::kernels::{BandwidthPolicy, KernelFamily, KernelSpec};

use crate::error::CliError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_REJECT: u8 = 3;

#[derive(Parser)]
#[command(name = "rkrd", version, about = "Kernel Rényi divergence estimation and privacy audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the divergence over an (alpha, lambda) grid.
    Estimate(EstimateArgs),
    /// Test a privacy claim against two sample files.
    Audit(AuditArgs),
    /// Recompute the decision stored in an audit report.
    Verify(VerifyArgs),
    /// Draw paired sample files from a Gaussian mechanism.
    Mechanism(MechanismArgs),
    /// Calibrate Gaussian noise to an (epsilon, delta) target.
    Calibrate(CalibrateArgs),
    /// Recompute the four-panel Gaussian-mechanism experiment.
    ReproduceFigure(FigureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Rbf,
    ProductRbf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Symmetric,
    Block,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ClaimArg {
    EpsDp,
    EpsDeltaDp,
    Rdp,
    Rkrdp,
}

fn parse_bandwidth(s: &str) -> Result<BandwidthPolicy, String> {
    if s.eq_ignore_ascii_case("median") {
        return Ok(BandwidthPolicy::Median);
    }
    match s.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthPolicy::Fixed(h)),
        _ => Err(format!("expected `median` or a positive number, got `{s}`")),
    }
}

#[derive(Args)]
struct KernelOpts {
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: KernelArg,
    /// `median` or a fixed positive bandwidth.
    #[arg(long, default_value = "median", value_parser = parse_bandwidth)]
    bandwidth: BandwidthPolicy,
}

impl KernelOpts {
    fn spec(&self) -> KernelSpec {
        KernelSpec {
            family: match self.kernel {
                KernelArg::Rbf => KernelFamily::Rbf,
                KernelArg::ProductRbf => KernelFamily::ProductRbf,
            },
            bandwidth: self.bandwidth,
        }
    }
}

#[derive(Args)]
struct SampleOpts {
    /// Samples of the mechanism on D (CSV or JSON; `.json` selects JSON).
    #[arg(long)]
    p_samples: PathBuf,
    /// Samples of the mechanism on D'.
    #[arg(long)]
    q_samples: PathBuf,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    samples: SampleOpts,
    #[command(flatten)]
    kernel: KernelOpts,
    /// Comma-separated orders, each > 1.
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    /// Comma-separated regularization values, each >= 0.
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    #[arg(long, value_enum, default_value = "symmetric")]
    method: MethodArg,
    /// Recorded in the output metadata.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; the other format is written next to it. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
pub struct AuditArgs {
    #[command(flatten)]
    samples: SampleOpts,
    #[command(flatten)]
    kernel: KernelOpts,
    #[arg(long, value_enum)]
    claim: ClaimArg,
    #[arg(long)]
    epsilon: f64,
    /// Required for eps-delta-dp.
    #[arg(long)]
    delta: Option<f64>,
    /// Test order.
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Required for rkrdp; optional for rdp and eps-dp.
    #[arg(long)]
    lambda: Option<f64>,
    /// Test level x0.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Recorded in the report.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Audit report JSON.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
pub struct MechanismArgs {
    #[arg(long, default_value_t = 30)]
    dim: usize,
    /// L2 distance between f(D) and f(D').
    #[arg(long)]
    sensitivity: f64,
    /// Noise standard deviation; calibrated from --epsilon/--delta if absent.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Samples per file.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 10.0)]
    sensitivity: f64,
    /// Orders at which to report the Gaussian Rényi divergence.
    #[arg(long, value_delimiter = ',', default_value = "2,6,12")]
    alpha: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FigureArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Repetitions per point.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, value_delimiter = ',', default_value = "100,200,300,400,600,800")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,6,12")]
    alpha: Vec<f64>,
    /// Number of log-spaced lambda values between 1e-6 and 1.
    #[arg(long, default_value_t = 25)]
    lambda_points: usize,
    #[arg(long, default_value_t = 30)]
    dim: usize,
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Estimate(a) => commands::estimate(&a),
        Command::Audit(a) => commands::audit(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Mechanism(a) => commands::mechanism(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
        Command::ReproduceFigure(a) => figure::reproduce(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
