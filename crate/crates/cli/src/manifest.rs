//! The run manifest written next to every command's outputs.

use std::path::Path;

use capture_core::experiments::SweepSpec;
use capture_core::Config;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Analyze,
    Simulate,
    Montecarlo,
    Sweep,
}

impl CommandKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Analyze => "analyze",
            CommandKind::Simulate => "simulate",
            CommandKind::Montecarlo => "montecarlo",
            CommandKind::Sweep => "sweep",
        }
    }
}

/// Everything needed to repeat a run. Timestamps are informational and are
/// the only fields that differ between two runs of the same command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: CommandKind,
    /// Where the config came from: a file path or `scenario:<name>`.
    pub source: String,
    /// The config after defaults and command-line overrides.
    pub config: Config,
    pub config_hash: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("{}: not a run manifest: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}
