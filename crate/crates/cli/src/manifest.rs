use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Record of one invocation, written next to its outputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector; re-running it reproduces the outputs.
    pub argv: Vec<String>,
    /// Resolved settings, including defaults.
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub wall_time_secs: f64,
    pub counters: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            config,
            seed,
            version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            ..Self::default()
        }
    }

    pub fn count(&mut self, key: impl Into<String>, value: f64) {
        self.counters.insert(key.into(), value);
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
