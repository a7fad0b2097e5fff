use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

/// Reproducibility record written by every subcommand. Carries no
/// timestamps, so identical runs give identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputEntry>,
    pub failures: Vec<Failure>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: &crate::config::PipelineConfig) -> Result<Self> {
        let value = serde_json::to_value(config)?;
        let canonical = serde_json::to_vec(&value)?;
        Ok(Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_sha256: sha256_hex(&canonical),
            config: value,
            outputs: Vec::new(),
            failures: Vec::new(),
            details: serde_json::Value::Null,
        })
    }

    /// Records `path` (hashed now) relative to `root`.
    pub fn add_output(&mut self, root: &Path, path: &Path) -> Result<()> {
        let rel = path.strip_prefix(root).unwrap_or(path);
        self.outputs.push(OutputEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: file_sha256(path)?,
        });
        Ok(())
    }

    pub fn fail(&mut self, item: impl Into<String>, error: impl std::fmt::Display) {
        let item = item.into();
        log::error!("{item}: {error:#}");
        self.failures.push(Failure {
            item,
            error: format!("{error:#}"),
        });
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, self.to_json()?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
