mod commands;
mod output;
mod params;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use params::Params;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl From<treecap::Error> for CliError {
    fn from(e: treecap::Error) -> Self {
        if e.is_verification() {
            CliError::Verification(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Verification(_) => 2,
        }
    }
}

/// Capacities of rooted trees and exact Ising quantities under plus, free
/// and spin-glass boundary conditions.
#[derive(Parser)]
#[command(name = "treecap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a spherically symmetric tree file.
    Gen(Params),
    /// L^p capacity with resistances theta^-q (defaults p = 3, q = 1).
    Cap(Params),
    /// Plus-boundary root LLR and its capacity bracket.
    Plus(Params),
    /// Free-boundary law of the root LLR, its mean, and optional Monte Carlo.
    Free(Params),
    /// Spin-glass law of the root LLR and its moments.
    Sg(Params),
    /// Bond percolation probability from the root (retention `--theta`).
    Perc(Params),
    /// Phase verdicts for plus, free and spin-glass boundary conditions.
    Criterion(Params),
    /// CSV of capacities, root values and moments per depth.
    Report(Params),
    /// Built-in verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[command(flatten)]
        params: Params,
    },
    /// cap_3 and the plus root value on critical power-law trees.
    SweepAlpha(Params),
    /// cap_3 before and after subdividing a critical power-law tree.
    SubdivideExp(Params),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Capacity,
    Recursion,
    Gibbs,
    Criteria,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(p) => commands::gen(p.resolve()?),
        Command::Cap(p) => commands::cap(p.resolve()?),
        Command::Plus(p) => commands::plus(p.resolve()?),
        Command::Free(p) => commands::free(p.resolve()?),
        Command::Sg(p) => commands::sg(p.resolve()?),
        Command::Perc(p) => commands::perc(p.resolve()?),
        Command::Criterion(p) => commands::criterion(p.resolve()?),
        Command::Report(p) => commands::report(p.resolve()?),
        Command::Verify { suite, params } => verify::run(suite, params.resolve()?),
        Command::SweepAlpha(p) => commands::sweep_alpha(p.resolve()?),
        Command::SubdivideExp(p) => commands::subdivide_exp(p.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("treecap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
