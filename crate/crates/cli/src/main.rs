//! `dagho`: experiment harness for the bivariate penalized DAG-learning
//! homotopy. Subcommands run homotopy solves, evaluate the landscape on a
//! grid, analyze stationary points, compare schedules, and generate or fit
//! synthetic SEM data. All outputs are deterministic given the full flag set.

mod cmds;
mod logging;
mod util;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

/// Exit code for numeric failures inside a run.
pub const EXIT_NUMERIC: u8 = 2;
/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dagho",
    version,
    about = "Homotopy solver and experiment harness for two-node penalized DAG learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a warm-started homotopy solve; writes a trajectory CSV and a report JSON.
    Homotopy(cmds::homotopy::HomotopyArgs),
    /// Evaluate f, h, g and the gradient of g on a rectangular grid (CSV).
    Landscape(cmds::landscape::LandscapeArgs),
    /// Stationary points at a given mu, or the threshold analysis without one (JSON).
    Stationary(cmds::stationary::StationaryArgs),
    /// Run the reference schedule and a fast-decay schedule from the same start.
    CompareSchedules(cmds::compare::CompareArgs),
    /// Generate SEM samples or fit a dataset from CSV.
    Data(cmds::data::DataArgs),
}

/// Errors carrying their process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_USAGE)
            };
        }
    };

    let result = match cli.command {
        Cmd::Homotopy(args) => cmds::homotopy::run(args),
        Cmd::Landscape(args) => cmds::landscape::run(args),
        Cmd::Stationary(args) => cmds::stationary::run(args),
        Cmd::CompareSchedules(args) => cmds::compare::run(args),
        Cmd::Data(args) => cmds::data::run(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dagho: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
