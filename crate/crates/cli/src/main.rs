//! `cherlb`: outage-threshold bounds for chi-squared beamforming gains and
//! the MIMO and RIS experiments built on them.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "cherlb", version, about = "Chernoff lower bounds on outage thresholds of chi-squared gains")]
#[command(args_override_self = true)]
struct Cli {
    /// Worker threads for Monte Carlo work (results do not depend on it).
    #[arg(long, env = "CHERLB_THREADS", global = true)]
    threads: Option<usize>,

    /// Flat key = value file with default flags for the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Threshold of one gain law with one method.
    Bound(BoundArgs),
    /// Thresholds over a grid of one parameter, for several methods.
    Sweep(SweepArgs),
    /// Single-stream MIMO experiments with aged channel state.
    Mimo(MimoArgs),
    /// Reconfigurable-surface experiments with exact gain sampling.
    Ris(RisArgs),
    /// Fast invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Chernoff lower bound.
    Cherlb,
    /// Polynomial threshold.
    Polylb,
    /// Exact quantile by root finding on the CDF.
    Quantile,
    Z1,
    Z2,
    Aty1,
    Aty2,
    Zar,
    Goldstein,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct GainArgs {
    /// Real Gaussian components K.
    #[arg(long, default_value_t = 4)]
    pub dof: u32,
    /// Sum of squared component means M^2.
    #[arg(long, default_value_t = 0.0)]
    pub noncentrality: f64,
    /// Common component variance sigma^2.
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    /// Target outage probability.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Relative bisection tolerance on the threshold.
    #[arg(long, default_value_t = 1e-4)]
    pub delta_beta: f64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct BoundArgs {
    #[command(flatten)]
    pub gain: GainArgs,
    /// Per-component `mean:variance` pairs; selects the generalized solver.
    #[arg(long, value_name = "LIST")]
    pub components: Option<String>,
    #[arg(long, value_enum, default_value_t = Method::Cherlb)]
    pub method: Method,
    /// Evaluate the exact CDF at the result.
    #[arg(long)]
    pub verify: bool,
    /// Also write the row, with a manifest, to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    M2,
    Rho,
    /// `--from/--to/--step` are powers of ten.
    Epsilon,
    Dof,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub gain: GainArgs,
    #[arg(long, value_enum)]
    pub variable: SweepVariable,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
    /// Keep `rho / K` at this value while sweeping the dof.
    #[arg(long)]
    pub rho_per_dof: Option<f64>,
    /// Comma-separated methods, or `all`. Besides the bound methods:
    /// `regression` and `regression-anchored` (M^2 sweeps only).
    #[arg(long, default_value = "cherlb,polylb,quantile")]
    pub methods: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MimoStat {
    RhoProb,
    Power,
    Reliability,
    All,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct MimoArgs {
    /// Transmit antennas M.
    #[arg(long, default_value_t = 16)]
    pub tx: usize,
    /// Receive antennas N.
    #[arg(long, default_value_t = 2)]
    pub rx: usize,
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = MimoStat::RhoProb)]
    pub stat: MimoStat,
    /// Non-centrality threshold for `rho-prob`.
    #[arg(long, default_value_t = 120.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 3.5e9)]
    pub carrier_hz: f64,
    #[arg(long, default_value_t = 20.0)]
    pub velocity_mps: f64,
    #[arg(long, default_value_t = 0.5e-3)]
    pub lag_s: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub delta_beta: f64,
    #[arg(long, default_value = "mimo.csv")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct RisArgs {
    /// Comma-separated reflector counts, increasing.
    #[arg(long, default_value = "16,32,64,128,256")]
    pub nr: String,
    /// Comma-separated K-factors, applied to both hops.
    #[arg(long, default_value = "3")]
    pub kappa: String,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value = "10000000", value_parser = parse_count)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub delta_beta: f64,
    #[arg(long, default_value = "ris.csv")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Accepts plain integers and exact scientific forms such as `1e8`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("'{s}' is not a count"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= 2f64.powi(53) {
        Ok(x as u64)
    } else {
        Err(format!("'{s}' is not a whole number"))
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Bound(a) => commands::bound(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Mimo(a) => commands::mimo(&a),
        Command::Ris(a) => commands::ris(&a),
        Command::Selftest(a) => commands::selftest(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !matches!(f, Failure::SelftestFailed) {
                eprintln!("error: {f}");
            }
            ExitCode::from(f.exit_code())
        }
    }
}
