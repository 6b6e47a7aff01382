//! `advection-eigen`: reference eigenvalues, sweeps, the counterexample
//! construction and self-checks.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad configuration or I/O,
//! 3 numerical failure.

mod cases;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use advection_eigen::Error;
use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::EmptyDomain(..)
            | Error::OutsideEnvelope(_)
            | Error::FamilyMismatch { .. }
            | Error::NotContact(_)
            | Error::TruncationTooShallow { .. }
            | Error::DegenerateGap(_)
            | Error::TooFewSamples { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "advection-eigen", version, about = "Principal eigenvalues of radial advection-diffusion operators")]
struct Cli {
    /// JSON config file; may name the command in a `command` field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config field, e.g. `--set grid.count=50` (value parsed as JSON).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Reference eigenvalues of the middle interval under the four boundary conditions.
    Refvals,
    /// Principal eigenvalue over a grid of s for one potential.
    Sweep,
    /// Build the oscillating potential and confirm it with a sweep.
    Counterexample,
    /// Run the self-checks.
    Verify,
    /// E, F, G and the window indices of the ladder coefficients.
    Efg,
    /// Galerkin against shooting on seeded random problems.
    Crosscheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Refvals => "refvals",
            Command::Sweep => "sweep",
            Command::Counterexample => "counterexample",
            Command::Verify => "verify",
            Command::Efg => "efg",
            Command::Crosscheck => "crosscheck",
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let file = match &cli.config {
        None => None,
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Some(v)
        }
    };
    let overrides = cli.overrides.iter().map(|s| config::parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let env = std::env::var(config::WORKERS_ENV).ok();
    let exp = config::resolve(file, cli.command.map(Command::name), &overrides, env.as_deref())?;
    let start = Instant::now();
    let out = commands::run(&exp)?;
    println!("{}: {}", exp.name(), out.summary);
    eprintln!("{} finished in {:.2} s, outputs in {}", exp.name(), start.elapsed().as_secs_f64(), exp.out_dir().display());
    Ok(out.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
