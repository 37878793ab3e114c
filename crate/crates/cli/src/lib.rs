//! Config-driven scenario runner for `sijc-core`.
//!
//! `sijc <spectrum|evolve|inversion|verify> --config <path> [--strict]`
//!
//! Exit codes: 0 success, 1 check or tolerance failure, 2 config error.
//! The output directory from the config can be overridden with the
//! `SIJC_OUTPUT_DIR` environment variable.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::{ConfigError, RunConfig};
pub use run::{execute, Command, Outcome, RunError, EXIT_CHECK, EXIT_CONFIG, EXIT_OK};

pub const OUTPUT_DIR_ENV: &str = "SIJC_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandArg {
    Spectrum,
    Evolve,
    Inversion,
    Verify,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Spectrum => Command::Spectrum,
            CommandArg::Evolve => Command::Evolve,
            CommandArg::Inversion => Command::Inversion,
            CommandArg::Verify => Command::Verify,
        }
    }
}

/// Spectrum, evolution and population-inversion runs for shape-invariant
/// Jaynes-Cummings models.
#[derive(Debug, Parser)]
#[command(name = "sijc", version)]
pub struct Cli {
    /// Pipeline to run.
    #[arg(value_enum)]
    pub command: CommandArg,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Fail (exit 1) when a series tail bound exceeds its tolerance.
    #[arg(long)]
    pub strict: bool,
}

/// Loads the config, applies the output override and runs the command.
/// Returns the process exit code; diagnostics go to stderr.
pub fn run_cli(cli: &Cli, output_override: Option<PathBuf>) -> i32 {
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(dir) = output_override {
        cfg.output_dir = dir;
    }
    match execute(cli.command.into(), &cfg, cli.strict) {
        Ok(outcome) => {
            for n in &outcome.notes {
                eprintln!("{n}");
            }
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
