//! Command-line front end for `diffrate-core`: configuration, sweeps and
//! machine-readable output.
//!
//! Exit codes: 0 on success, 1 on run-time failures, 2 on configuration
//! errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{execute, Command, Report};
pub use config::{Format, Grid, RunConfig};
pub use error::CliError;
pub use output::{fmt_num, Cell, Table};

#[derive(Debug, Parser)]
#[command(name = "diffrate", version, about = "Achievable-rate sweeps for diffusive molecular channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    /// TOML file overriding the defaults (or the preset).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Named grid preset: fig1 ... fig6.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Monte-Carlo seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; all available cores when absent.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Sub {
    /// Memory horizon, memory length and per-interval hit probabilities.
    Cir,
    /// Threshold-optimised MI over the (T_sym, pi0) grid.
    MiSurface,
    /// Threshold-optimised MI and achievable rate over the (T_sym, pi0) grid.
    RateSurface,
    /// Capacity-achieving rate over the (T_sym, sigma_ext) grid.
    NoiseSweep,
    /// Monte-Carlo check of the impulse response and transition matrix.
    McValidate,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Cir => Command::Cir,
            Sub::MiSurface => Command::MiSurface,
            Sub::RateSurface => Command::RateSurface,
            Sub::NoiseSweep => Command::NoiseSweep,
            Sub::McValidate => Command::McValidate,
        }
    }
}

impl Cli {
    /// Defaults, then preset, then config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.preset {
            Some(name) => RunConfig::preset(name)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.config {
            cfg = cfg.merge_file(path)?;
        }
        if let Some(out) = &self.out {
            cfg.output.path = Some(out.clone());
        }
        if let Some(format) = self.format {
            cfg.output.format = format;
        }
        if let Some(seed) = self.seed {
            cfg.mc.seed = seed;
        }
        Ok(cfg)
    }
}

/// Resolves the configuration, runs the command on the requested number of
/// threads and writes the output. Warnings are returned for the caller to
/// print.
pub fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let cfg = cli.resolve()?;
    let command = Command::from(cli.command);
    let report = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Output(e.to_string()))?
            .install(|| execute(command, &cfg))?,
        None => execute(command, &cfg)?,
    };
    let text = report.render(&cfg)?;
    match &cfg.output.path {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(text.as_bytes())?;
        }
    }
    Ok(report.warnings)
}
