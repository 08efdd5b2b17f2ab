//! Experiment driver: JSON configuration, CSV and field output, and the
//! acceptance suite.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;
pub mod suite;

use std::time::Instant;

use config::RunConfig;
use output::{Collector, Manifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] magscat_core::Error),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use magscat_core::Error as E;
        match self {
            CliError::Core(E::NonConvergence { .. } | E::CharacteristicVariety { .. }) => EXIT_NONCONVERGENCE,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Direct,
    Cgo,
    Cauchy,
    Reconstruct,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Direct => "direct",
            Command::Cgo => "cgo",
            Command::Cauchy => "cauchy",
            Command::Reconstruct => "reconstruct",
            Command::Verify => "verify",
        }
    }
}

/// Result of a full run: exit code plus the lines to show the user.
#[derive(Debug)]
pub struct RunReport {
    pub exit_code: i32,
    pub lines: Vec<String>,
}

/// Runs one command into `cfg.output_dir` and always leaves a manifest.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let mut out = Collector::new(&cfg.output_dir)?;
    let result = match command {
        Command::Direct => commands::cmd_direct(cfg, &mut out),
        Command::Cgo => commands::cmd_cgo(cfg, &mut out),
        Command::Cauchy => commands::cmd_cauchy(cfg, &mut out),
        Command::Reconstruct => commands::cmd_reconstruct(cfg, &mut out),
        Command::Verify => commands::cmd_verify(cfg, &mut out),
    };
    let (exit_code, lines) = match &result {
        Ok(o) => (if o.passed { EXIT_PASS } else { EXIT_FAIL }, o.summary.clone()),
        Err(e) => (e.exit_code(), vec![format!("error: {e}")]),
    };
    let files = out.files().to_vec();
    let mut manifest = Manifest::new(command.name(), cfg);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.exit_code = exit_code;
    manifest.summary = &lines;
    manifest.outputs = &files;
    out.json("manifest.json", &manifest)?;
    match result {
        Ok(_) => Ok(RunReport { exit_code, lines }),
        Err(e) => Err(e),
    }
}
