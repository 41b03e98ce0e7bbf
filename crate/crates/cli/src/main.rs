//! `panelq`: two-step estimation and bootstrap inference for quantiles of
//! heterogeneous panel coefficients, plus a Monte Carlo coverage harness.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 input/validation error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::FileConfig;

#[derive(Parser, Debug)]
#[command(
    name = "panelq",
    version,
    about = "Quantiles of heterogeneous panel coefficients: estimation, bootstrap inference, and Monte Carlo experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file supplying defaults for any flag (flags > config > defaults)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Cap the worker thread pool; never changes results
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug, Clone)]
struct PanelInputArgs {
    /// Long-format panel CSV (unit,time,y,regressors...)
    #[arg(long)]
    input: Option<PathBuf>,

    /// Unit id column name [default: unit]
    #[arg(long)]
    unit_col: Option<String>,

    /// Time column name [default: time]
    #[arg(long)]
    time_col: Option<String>,

    /// Outcome column name [default: y]
    #[arg(long)]
    y_col: Option<String>,

    /// Comma-separated regressor columns [default: every other column]
    #[arg(long)]
    x_cols: Option<String>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    panel: PanelInputArgs,

    /// Where to write the per-unit estimates CSV
    #[arg(long)]
    output: Option<PathBuf>,

    /// Quantile levels (repeatable or comma-separated) [default: 0.5]
    #[arg(long)]
    tau: Vec<String>,

    /// Coefficient: zero-based index or source column name [default: 0]
    #[arg(long)]
    coef: Option<String>,
}

#[derive(Args, Debug)]
struct BootstrapArgs {
    #[command(flatten)]
    panel: PanelInputArgs,

    /// Where to write the bootstrap run JSON (optional)
    #[arg(long)]
    output: Option<PathBuf>,

    /// Quantile level (exactly one) [default: 0.5]
    #[arg(long)]
    tau: Vec<String>,

    /// Coefficient: zero-based index or source column name [default: 0]
    #[arg(long)]
    coef: Option<String>,

    /// Bootstrap design: sqb (stochastic) or dqb (deterministic) [default: sqb]
    #[arg(long)]
    design: Option<String>,

    /// Number of bootstrap replicates [default: 299]
    #[arg(long)]
    b: Option<usize>,

    /// Nominal level for the confidence interval [default: 0.05]
    #[arg(long)]
    alpha: Option<f64>,

    /// Master seed (generated and echoed if omitted)
    #[arg(long)]
    seed: Option<u64>,

    /// Null value for the symmetric-tail p-value
    #[arg(long)]
    null: Option<f64>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[command(flatten)]
    panel: PanelInputArgs,

    /// Where to write the curve CSV (tau,estimate,sqb_lo,sqb_hi,dqb_lo,dqb_hi)
    #[arg(long)]
    output: Option<PathBuf>,

    /// Quantile grid (repeatable or comma-separated) [default: 0.01..0.99]
    #[arg(long)]
    tau: Vec<String>,

    /// Coefficient: zero-based index or source column name [default: 0]
    #[arg(long)]
    coef: Option<String>,

    /// Number of bootstrap replicates per band [default: 299]
    #[arg(long)]
    b: Option<usize>,

    /// Nominal level for the bands [default: 0.05]
    #[arg(long)]
    alpha: Option<f64>,

    /// Master seed (generated and echoed if omitted)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Shipped experiment preset (see --list-presets)
    #[arg(long)]
    preset: Option<String>,

    /// Inline experiment spec: a SimulationSpec JSON file
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Enumerate the shipped presets and exit
    #[arg(long)]
    list_presets: bool,

    /// Where to write the coverage report CSV
    #[arg(long)]
    output: Option<PathBuf>,

    /// Monte Carlo replications per cell (overrides the spec)
    #[arg(long)]
    n_mc: Option<usize>,

    /// Bootstrap replicates per replication (overrides the spec)
    #[arg(long)]
    b: Option<usize>,

    /// Significance level (overrides the spec)
    #[arg(long)]
    alpha: Option<f64>,

    /// Master seed (overrides the spec)
    #[arg(long)]
    seed: Option<u64>,

    /// Keep only these NxT cells, e.g. --cell 80x80 (repeatable/comma list)
    #[arg(long)]
    cell: Vec<String>,

    /// Keep only these tau cells (repeatable or comma-separated)
    #[arg(long)]
    tau: Vec<String>,

    /// Bootstrap methods to report, e.g. sqb,dqb (overrides the spec)
    #[arg(long)]
    methods: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Two-step estimation: per-unit OLS, then cross-sectional quantiles
    Estimate(EstimateArgs),
    /// Bootstrap confidence interval and p-value for one (tau, coefficient)
    Bootstrap(BootstrapArgs),
    /// Quantile curve over a tau grid with SQB and DQB bands
    Curve(CurveArgs),
    /// Monte Carlo bias/coverage experiments (presets or inline specs)
    Simulate(SimulateArgs),
}

fn run(cli: &Cli) -> panelq_core::Result<()> {
    let file_cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    if let Some(threads) = cli.threads.or(file_cfg.threads) {
        // results are thread-count independent by the determinism contract
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| panelq_core::Error::InvalidParameter(format!("thread pool: {e}")))?;
    }

    match &cli.command {
        Command::Estimate(args) => commands::cmd_estimate(args, &file_cfg),
        Command::Bootstrap(args) => commands::cmd_bootstrap(args, &file_cfg),
        Command::Curve(args) => commands::cmd_curve(args, &file_cfg),
        Command::Simulate(args) => commands::cmd_simulate(args, &file_cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
