//! The `acdyn` command line front end.
//!
//! Every subcommand reads one JSON scenario, computes its outputs in memory
//! and writes them under `--out` only when the whole command succeeds.
//! Exit codes: 0 success, 2 configuration error, 3 numerical or
//! feasibility failure, 1 output I/O failure.

mod commands;
pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::error::Error;
pub use scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "acdyn", version, about = "Active cyber defense contagion dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the scenario model; writes trajectory.csv and summary.json.
    Simulate(RunArgs),
    /// Classify an A-SIS scenario; writes regime.json and any requested
    /// nullclines.csv, phase_grid.csv and certificate.json.
    Analyze(RunArgs),
    /// Solve the investment block; writes solution.json.
    Optimize(RunArgs),
    /// Closed-form A-SIR peak checked against integration; writes peak.json.
    Peak(RunArgs),
    /// Evaluate outputs over the sweep grid; writes sweep.csv.
    Sweep(RunArgs),
    /// Finite-population ensemble; writes ensemble.csv and stochastic.json.
    Stochastic(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the stochastic seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::InvalidState(_) | Error::OutOfDomain { .. } | Error::WrongRegime(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a)
            | Command::Analyze(a)
            | Command::Optimize(a)
            | Command::Peak(a)
            | Command::Sweep(a)
            | Command::Stochastic(a) => a,
        }
    }
}

/// Runs one command end to end; returns the list of files written.
pub fn execute(command: &Command) -> Result<Vec<PathBuf>, CliError> {
    let args = command.args();
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Config(format!("cannot read scenario {}: {e}", args.scenario.display())))?;
    let scenario = Scenario::parse(&text)?;
    let ctx = commands::Context { seed: args.seed };
    let job = || match command {
        Command::Simulate(_) => commands::simulate(&scenario),
        Command::Analyze(_) => commands::analyze(&scenario),
        Command::Optimize(_) => commands::optimize(&scenario),
        Command::Peak(_) => commands::peak(&scenario),
        Command::Sweep(_) => commands::sweep(&scenario),
        Command::Stochastic(_) => commands::stochastic(&scenario, &ctx),
    };
    let outputs = match args.workers {
        None => job()?,
        Some(0) => return Err(CliError::Config("--workers: must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?
            .install(job)?,
    };
    let written = outputs.names().map(|n| args.out.join(n)).collect();
    outputs
        .commit(&args.out)
        .map_err(|e| CliError::Io(format!("cannot write to {}: {e}", args.out.display())))?;
    Ok(written)
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("acdyn: {e}");
            e.exit_code()
        }
    }
}
