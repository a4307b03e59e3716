//! `mmhedge`: solve the dealer quoting/hedging problem from a JSON
//! configuration, cross-check the solved value by Monte Carlo, and sweep
//! comparative statics — all outputs as commented CSV plus a resolved
//! config for provenance.

mod commands;
mod config;
mod csvio;

use clap::{Parser, Subcommand};
use config::ConfigError;
use mmhedge_core::{SimError, SolverError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Everything that can go wrong end to end, mapped onto distinct exit
/// codes: 2 config/table, 3 solver, 4 simulation, 5 I/O.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Table(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("sweep value {value}: {source}")]
    Sweep { value: f64, source: SolverError },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        // I/O failures surface as I/O; malformed content as a table error.
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => CliError::Io(io),
                other => CliError::Table(format!("{other:?}")),
            }
        } else {
            CliError::Table(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Table(_) => 2,
            CliError::Solver(_) | CliError::Sweep { .. } => 3,
            CliError::Sim(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

#[derive(Parser)]
#[command(name = "mmhedge", version, about)]
struct Cli {
    /// Override the simulation seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap the worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the control problem and write policy and figure tables.
    Solve {
        /// JSON configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if absent.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo check of the solved value, from a stored or fresh policy.
    Simulate {
        /// JSON configuration file (must contain a `sim` section).
        #[arg(long)]
        config: PathBuf,
        /// Policy table CSV to replay; defaults to solving in-process.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Output directory, created if absent.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep one parameter and tabulate the internalization zone.
    Statics {
        /// JSON configuration file (must contain a `sweep` section).
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if absent.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    }
    match cli.command {
        Command::Solve { config, out } => commands::cmd_solve(&config, &out),
        Command::Simulate {
            config,
            policy,
            out,
        } => commands::cmd_simulate(&config, policy.as_deref(), &out, cli.seed),
        Command::Statics { config, out } => commands::cmd_statics(&config, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
