//! `cubedc`: divide-and-conquer estimation on data files and Monte-Carlo
//! experiments.
//!
//! Exit status is 0 on success, 1 on a numeric failure during a run and 2
//! on usage or input errors.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cubedc::simgen::Example;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Numeric(#[from] cubedc::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Numeric(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cubedc",
    version,
    about = "Divide-and-conquer inference for cube-root M-estimators"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CUBEDC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate from a CSV dataset split into groups in file order.
    Estimate(EstimateArgs),
    /// Run one Monte-Carlo design cell.
    Simulate(SimulateArgs),
    /// Regress log SD on log group size or log group count.
    RateCheck(RateCheckArgs),
    /// Monte-Carlo variance of the limiting argmax for the location example.
    LimitVar(LimitVarArgs),
    /// Print a results CSV as an aligned table.
    Table(TableArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub example: Example,
    /// CSV with header `x` (location), `x1,x2,y` (maxscore) or `x,a,y,pi` (valuesearch).
    #[arg(long)]
    pub input: PathBuf,
    /// Number of groups S.
    #[arg(long)]
    pub groups: usize,
    /// Shuffle rows with this seed before splitting.
    #[arg(long, value_name = "SEED")]
    pub shuffle: Option<u64>,
    /// Skip the standard error and interval (allows S = 1).
    #[arg(long)]
    pub no_se: bool,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Write the aggregate report as CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub example: Example,
    /// log2 of the total sample size N.
    #[arg(long)]
    pub n_exp: u32,
    /// log2 of the number of groups S.
    #[arg(long)]
    pub s_exp: u32,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Also fit the pooled estimator on all N observations.
    #[arg(long)]
    pub pooled: bool,
    /// Leave runtime_s empty so output depends only on seed and design.
    #[arg(long)]
    pub no_timing: bool,
    /// Allow N above 2^22.
    #[arg(long)]
    pub extended: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateCheckArgs {
    #[arg(long)]
    pub example: Example,
    /// Fixed log2 S; pair with --n-exps.
    #[arg(long, requires = "n_exps", conflicts_with_all = ["n_exp", "s_exps"])]
    pub s_exp: Option<u32>,
    /// Comma-separated log2 group sizes n.
    #[arg(long, value_delimiter = ',')]
    pub n_exps: Vec<u32>,
    /// Fixed log2 n; pair with --s-exps.
    #[arg(long, requires = "s_exps")]
    pub n_exp: Option<u32>,
    /// Comma-separated log2 group counts S.
    #[arg(long, value_delimiter = ',')]
    pub s_exps: Vec<u32>,
    #[arg(long, default_value_t = 300)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also report the pooled slope against N (with --n-exps).
    #[arg(long)]
    pub pooled: bool,
    #[arg(long)]
    pub no_timing: bool,
    #[arg(long)]
    pub extended: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitVarArgs {
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, default_value_t = 8.0)]
    pub half_width: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub input: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Estimate(a) => commands::estimate(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::RateCheck(a) => commands::rate_check(&a),
        Command::LimitVar(a) => commands::limit_var(&a),
        Command::Table(a) => commands::table(&a),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
