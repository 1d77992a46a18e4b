//! Command-line front end: deterministic, seeded batch runs that emit
//! plot-ready CSV/JSON plus a reproducibility manifest.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit code 2: configuration problems. Exit code 3: the numerical
/// failure budget was exceeded.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    FailureBudget(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::FailureBudget(msg) => write!(f, "numerical failure budget exceeded: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Io(_) => ExitCode::from(2),
            CliError::FailureBudget(_) => ExitCode::from(3),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "normscape",
    version,
    about = "Population-level norm attractors in 2x2 game space: mean-field landscapes, parameter trajectories, networked agent simulations, and global sensitivity analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; for `abm` it overrides the config's seed field.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (also via NORMSCAPE_THREADS; default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Max fraction of QRE solves allowed to hit the iteration cap.
    #[arg(long, default_value_t = 0.05)]
    failure_budget: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the fitness landscape and its attractors for one utility
    /// family.
    Landscape(RunArgs),
    /// Follow a closed loop in (mu_eta, mu_lambda) space and track the
    /// dominant attractor and its perceived image.
    Trajectory(RunArgs),
    /// Run the networked agent-based model.
    Abm(RunArgs),
    /// Saltelli-sampled global sensitivity sweep over ABM parameters.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Reuse completed jobs from an interrupted run's results.csv.
        #[arg(long)]
        resume: bool,
    },
}

fn configure_threads(cli_threads: Option<usize>) -> Result<(), CliError> {
    let threads = cli_threads.or_else(|| {
        std::env::var("NORMSCAPE_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(k) = threads {
        if k == 0 {
            return Err(CliError::Config("thread count must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Landscape(args) => {
            configure_threads(args.threads)?;
            commands::cmd_landscape(
                &args.config,
                args.seed.unwrap_or(0),
                &args.out,
                args.failure_budget,
            )
        }
        Command::Trajectory(args) => {
            configure_threads(args.threads)?;
            commands::cmd_trajectory(
                &args.config,
                args.seed.unwrap_or(0),
                &args.out,
                args.failure_budget,
            )
        }
        Command::Abm(args) => {
            configure_threads(args.threads)?;
            commands::cmd_abm(&args.config, args.seed, &args.out, args.failure_budget)
        }
        Command::Sweep { run, resume } => {
            configure_threads(run.threads)?;
            commands::cmd_sweep(&run.config, run.seed.unwrap_or(0), &run.out, *resume)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("normscape: {err}");
            err.exit_code()
        }
    }
}
