//! Command-line front end for the `bicm` library.
//!
//! Every command writes a CSV table preceded by a `#`-prefixed header that
//! holds the full effective configuration. Passing such a CSV back through
//! `--config` reproduces it byte for byte.

pub mod config;
pub mod grid;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{load_config, parse_config, Command, Overrides, RunSpec};
pub use grid::Grid;
pub use run::execute;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Library(#[from] bicm::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Io(_) | CliError::Library(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bicm", version, about = "Capacities, GMI, error exponents and cutoff rates for CM and BICM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// CM and BICM capacities
    Capacity(RunArgs),
    /// Generalized mutual information of decoding metrics
    Gmi(RunArgs),
    /// Random-coding error exponents over a rate grid
    Exponent(RunArgs),
    /// Cutoff rates
    Cutoff(RunArgs),
    /// Simulated random codes against the exponent bound
    Validate(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML file, or a CSV written by this tool; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl Sub {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Sub::Capacity(a) => (Command::Capacity, a),
            Sub::Gmi(a) => (Command::Gmi, a),
            Sub::Exponent(a) => (Command::Exponent, a),
            Sub::Cutoff(a) => (Command::Cutoff, a),
            Sub::Validate(a) => (Command::Validate, a),
        }
    }
}

/// Resolves the effective spec of a parsed command line.
pub fn resolve(command: Command, args: &RunArgs) -> Result<RunSpec, CliError> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => Overrides::default(),
    };
    RunSpec::resolve(command, args.overrides.clone().over(file))
}

fn run_args(command: Command, args: RunArgs) -> Result<(), CliError> {
    let spec = resolve(command, &args)?;
    let csv = execute(&spec)?;
    match &args.out {
        Some(path) => std::fs::write(path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(())
}

/// Parses `argv`, runs the command and maps failures to exit codes (2 for usage errors).
pub fn main_with<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let (command, args) = cli.command.split();
    match run_args(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
