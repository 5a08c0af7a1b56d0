//! `cfqkd`: command-line harness for the counterfactual QKD simulator.
//!
//! Exit codes: 0 success, 1 failed comparison or internal invariant,
//! 2 configuration error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, RunArgs};

#[derive(Debug, Parser)]
#[command(name = "cfqkd", version, about = "Counterfactual QKD simulator and analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo session and emit its summary.
    Run(RunArgs),
    /// Emit closed-form tables over a reflectivity grid.
    Oracle(OracleArgs),
    /// Run a session and compare every statistic with the closed forms.
    Compare(RunArgs),
    /// Evaluate the no-cloning distinguishability criterion.
    Nocloning(NoCloningArgs),
    /// Run one session per grid point and tabulate against the closed forms.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Explicit reflectivities (comma separated); overrides --grid-step.
    #[arg(
        long = "reflectivity",
        short = 'r',
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub reflectivities: Vec<f64>,
    /// Step of the grid from 0 to 1.
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Strategies to tabulate (comma separated); default all.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NoCloningArgs {
    /// Reflectivity of the protocol states (ignored with --state0/--state1).
    #[arg(long, short = 'r', default_value_t = 0.5, allow_negative_numbers = true)]
    pub reflectivity: f64,
    /// Text state file: lines of `a_index b_index real imag`.
    #[arg(long, requires = "state1")]
    pub state0: Option<PathBuf>,
    #[arg(long, requires = "state0")]
    pub state1: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "kv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Step of the reflectivity grid from 0 to 1.
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Run(args) => commands::run(args),
        Command::Oracle(args) => commands::oracle(args),
        Command::Compare(args) => commands::compare(args),
        Command::Nocloning(args) => commands::nocloning(args),
        Command::Sweep(args) => commands::sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cfqkd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
