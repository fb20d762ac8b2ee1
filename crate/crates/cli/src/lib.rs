//! `capsim`: command-line front end for the capture manipulator toolkit.
//!
//! ```text
//! capsim analyze    [--config FILE | --scenario NAME]
//! capsim simulate   [--config FILE | --scenario NAME] [--seed N]
//! capsim montecarlo [--config FILE | --scenario NAME] [--trials N] [--seed N]
//! capsim sweep      --spec FILE [--config FILE | --scenario NAME] [--trials N] [--seed N]
//! capsim rerun      MANIFEST
//! capsim scenarios  [--show NAME]
//! ```
//!
//! Every run writes its files and a `manifest.json` into one directory:
//! `--out DIR`, or a directory named after the command, config hash and seed
//! under `$CAPSIM_OUTPUT_ROOT` (default `capsim-out`).
//!
//! Exit codes: 0 success or design pass, 1 output I/O failure, 2 invalid
//! input, 3 design fail, 4 simulation diverged.

pub mod commands;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use capture_core::experiments::ExperimentError;
use capture_core::ConfigError;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub const OUTPUT_ROOT_ENV: &str = "CAPSIM_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "capsim-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Io = 1,
    InvalidInput = 2,
    DesignFail = 3,
    Diverged = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Io { .. } => ExitCode::Io,
            _ => ExitCode::InvalidInput,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "capsim",
    version,
    about = "Capture manipulator design analysis and encounter simulation"
)]
pub struct Cli {
    /// Output directory for this run.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// JSON config document.
    #[arg(long, conflicts_with = "scenario")]
    pub config: Option<PathBuf>,
    /// Bundled config by name (see `capsim scenarios`).
    #[arg(long)]
    pub scenario: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Size the design and check it against its requirements.
    Analyze {
        #[command(flatten)]
        source: ConfigArgs,
    },
    /// Run one trial and write its full trace.
    Simulate {
        #[command(flatten)]
        source: ConfigArgs,
        /// Trial seed; the config's seed when absent.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a Monte Carlo batch.
    Montecarlo {
        #[command(flatten)]
        source: ConfigArgs,
        #[arg(long)]
        trials: Option<u64>,
        /// Master seed; the config's seed when absent.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a batch for every cell of a parameter grid.
    Sweep {
        #[command(flatten)]
        source: ConfigArgs,
        /// Sweep spec: `{"axes": [{"path": "/design/arm_extension", "values": [..]}]}`.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Repeat a run from its manifest.
    Rerun { manifest: PathBuf },
    /// List the bundled configs.
    Scenarios {
        /// Print one bundled config document.
        #[arg(long)]
        show: Option<String>,
    },
}

/// Default output directory under the output root.
pub fn default_run_dir(command: &str, config_hash: &str, seed: u64) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
    root.join(format!("{command}-{}-seed{seed}", &config_hash[..12]))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::run(&cli) {
        Ok(code) => code as i32,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as i32
        }
    }
}
