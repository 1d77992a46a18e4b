//! Run manifests: every command writes exactly one manifest next to its
//! output files, capturing the fully resolved config and seed so the run
//! can be reproduced.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub master_seed: u64,
    /// Effective configuration with all defaults materialized.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, seed: u64, config: &C) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: seed,
            config: serde_json::to_value(config).expect("config serializes"),
            outputs: Vec::new(),
            duration_seconds: 0.0,
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
    }
}

