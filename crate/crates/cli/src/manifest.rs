use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Provenance of one command run, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector, program name excluded.
    pub args: Vec<String>,
    pub config_path: Option<PathBuf>,
    /// The configuration after defaults and overrides were applied.
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, config: Value) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config_path: config_path.map(Path::to_path_buf),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// `out.csv` gets `out.csv.manifest.json`; a directory gets
    /// `manifest.json` inside it.
    pub fn path_for(out: &Path) -> PathBuf {
        if out.is_dir() {
            out.join("manifest.json")
        } else {
            let mut name = out.file_name().unwrap_or_default().to_os_string();
            name.push(".manifest.json");
            out.with_file_name(name)
        }
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let path = Self::path_for(out);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
