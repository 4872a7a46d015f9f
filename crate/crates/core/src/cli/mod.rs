//! Command-line front end: `ds-stab simulate|certify|verify|sweep --config <path>`.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{Outcome, Pipeline};
pub use config::{Config, ConfigError};

/// Exit status for a completed run or a passing verification.
pub const EXIT_OK: i32 = 0;
/// Exit status for a failed verification.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for usage, configuration and runtime errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Run(#[from] crate::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ds-stab",
    version,
    about = "Closed-loop stability certificates and their verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Replaces every seed in the scenario.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the closed loop and write the trajectory.
    Simulate(Common),
    /// Estimate the constants and write the certificate.
    Certify(Common),
    /// Check a trajectory against a certificate.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Certify, simulate and verify over a grid of gains.
    Sweep(Common),
}

fn load(common: &Common) -> Result<Config, CliError> {
    let mut cfg = Config::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    std::fs::create_dir_all(&common.out).map_err(|e| CliError::Run(e.into()))?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&load(&c)?, &c.out),
        Command::Certify(c) => commands::certify(&load(&c)?, &c.out),
        Command::Verify {
            common,
            trajectory,
            certificate,
        } => commands::verify(&load(&common)?, &common.out, trajectory, certificate),
        Command::Sweep(c) => commands::sweep(&load(&c)?, &c.out),
    }
}

/// Parse arguments, honour `DS_STAB_THREADS`, run, and map the result to an exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    if let Ok(v) = std::env::var("DS_STAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                crate::par::configure_threads(n);
            }
            _ => {
                eprintln!("config error: DS_STAB_THREADS: expected a positive integer, got `{v}`");
                return EXIT_ERROR;
            }
        }
    }
    match dispatch(cli) {
        Ok(Outcome::Complete) => EXIT_OK,
        Ok(Outcome::Fail) => {
            eprintln!("verification FAIL");
            EXIT_FAIL
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
