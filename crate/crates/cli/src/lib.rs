//! Command-line runner: loads a JSON run config, executes one experiment and
//! writes its artifacts plus a `manifest.json` under the output directory.
//!
//! Exit codes: 0 success, 1 verification or certification failed, 2 config
//! error, 3 numerical failure.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Overrides, RunConfig};
pub use output::ManifestEntry;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<singular_pmp::Error> for CliError {
    fn from(e: singular_pmp::Error) -> Self {
        use singular_pmp::Error as E;
        match e {
            E::NonFinite { .. } | E::BlowUp { .. } | E::RankDeficient { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate the candidate and write trajectories with a summary.
    Simulate,
    /// Estimate the candidate's cost.
    Cost,
    /// Check the necessary optimality conditions.
    Verify,
    /// Check the sufficient conditions and compare against random competitors.
    Certify,
    /// Tabulate the convergence of chattering approximations of a relaxed control.
    Chatter,
    /// Compute and export the adjoint pair.
    Adjoint,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Cost => "cost",
            Command::Verify => "verify",
            Command::Certify => "certify",
            Command::Chatter => "chatter",
            Command::Adjoint => "adjoint",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "singular-pmp",
    version,
    about = "Relaxed and singular stochastic control experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `monte_carlo.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `monte_carlo.paths`.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Overrides `grid.steps`.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
}

#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: String,
    pub files: Vec<ManifestEntry>,
}

/// Runs one command with an already parsed config.
pub fn execute(
    command: Command,
    config: RunConfig,
    overrides: Overrides,
    out: &std::path::Path,
) -> Result<Outcome, CliError> {
    let config = config.resolve(overrides)?;
    let mut dir = output::OutputDir::create(out)?;
    let (exit_code, summary) = match command {
        Command::Simulate => commands::simulate_cmd(&config, &mut dir),
        Command::Cost => commands::cost_cmd(&config, &mut dir),
        Command::Verify => commands::verify_cmd(&config, &mut dir),
        Command::Certify => commands::certify_cmd(&config, &mut dir),
        Command::Chatter => commands::chatter_cmd(&config, &mut dir),
        Command::Adjoint => commands::adjoint_cmd(&config, &mut dir),
    }?;
    let files = dir.finish(command.name(), &config, exit_code)?;
    Ok(Outcome {
        exit_code,
        summary,
        files,
    })
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let config = RunConfig::load(path)?;
    let overrides = Overrides {
        seed: cli.seed,
        paths: cli.paths,
        steps: cli.steps,
    };
    execute(cli.command, config, overrides, &cli.out)
}

/// Parses arguments, runs, reports on stdout/stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("wrote {} files under {}", outcome.files.len() + 1, cli.out.display());
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("singular-pmp: {e}");
            e.exit_code()
        }
    }
}
