//! Run manifest: what was invoked, what was produced, with checksums.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub bytes: u64,
    pub crc32: u32,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    pub resolved_config: serde_json::Value,
    pub artifacts: Vec<ArtifactEntry>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(resolved_config: serde_json::Value, started_unix_ms: u128) -> Self {
        Self {
            tool: "anng",
            version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            resolved_config,
            artifacts: Vec::new(),
            started_unix_ms,
            finished_unix_ms: 0,
        }
    }

    /// Record an emitted file with the CRC32 of its on-disk content.
    pub fn record(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading back artifact {}", path.display()))?;
        self.artifacts.push(ArtifactEntry {
            path: path.display().to_string(),
            bytes: bytes.len() as u64,
            crc32: crc32fast::hash(&bytes),
        });
        Ok(())
    }

    pub fn write(mut self, path: &Path) -> Result<PathBuf> {
        self.finished_unix_ms = unix_ms();
        let mut bytes = serde_json::to_vec_pretty(&self)?;
        bytes.push(b'\n');
        anng::io::write_atomic(path, &bytes)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path.to_path_buf())
    }
}
