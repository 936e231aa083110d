//! Batch front end: `fieldwork <command> <config> [--set section.key=value]... [-o path]`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numeric
//! regime error, 4 convergence failure or internal inconsistency.

pub mod commands;
pub mod config;
pub mod csv;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::{ConfigError, GridOptions, RunConfig};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// CSV of (μ, Re P̃, Im P̃)
    Charfn,
    /// Work density on the inversion grid plus the atom weight
    Pdf,
    /// First two moments and the Jarzynski value
    Moments,
    /// Detailed-balance deviations from the closed-form density
    CheckCrooks,
    /// |⟨e^{−βW}⟩ − 1|
    CheckJarzynski,
    /// Discrete-mode interferometer against the continuum result
    Ramsey,
    /// Fluctuation ratio under common rescaling of both widths
    Sweep,
}

#[derive(Debug, Parser)]
#[command(name = "fieldwork", version, about = "Work statistics of localized unitaries on thermal scalar fields")]
pub struct Cli {
    pub command: Command,
    /// Scenario configuration file
    pub config: PathBuf,
    /// Override a configuration value, e.g. `--set field.beta=2`
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    /// Output CSV path (overrides [output] path; stdout if neither is given)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(e) => match e {
                Error::Convergence { .. } | Error::Inconsistency(_) | Error::InvalidState(_) => 4,
                Error::InvalidArgument(_) | Error::InvalidRegime(_) | Error::RegimeViolation(_) => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

/// Renders the command's table as CSV text.
pub fn render(command: Command, cfg: &RunConfig) -> Result<String, CliError> {
    let table = match command {
        Command::Charfn => commands::charfn_table(cfg),
        Command::Pdf => commands::pdf_table(cfg),
        Command::Moments => commands::moments_table(cfg),
        Command::CheckCrooks => commands::crooks_table(cfg),
        Command::CheckJarzynski => commands::jarzynski_table(cfg),
        Command::Ramsey => commands::ramsey_table(cfg),
        Command::Sweep => commands::sweep_table(cfg),
    }?;
    Ok(table.render())
}

/// Runs one command; nothing is written unless it succeeds.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", cli.config.display())))?;
    let cfg = RunConfig::from_text(&text, &cli.set)?;
    let csv = render(cli.command, &cfg)?;
    match cli.output.clone().or(cfg.output.clone()) {
        Some(path) => fs::write(&path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fieldwork: {e}");
            e.exit_code()
        }
    }
}
