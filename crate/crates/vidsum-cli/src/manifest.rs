//! Run manifests: every subcommand that writes files also records what it
//! did — the resolved configuration, SHA-256 digests of every input it
//! read, the tool version, and the wall time.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use vidsum_core::{io, Error, Result};

/// The `run_manifest.json` schema.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// Subcommand name.
    pub command: String,
    /// Snapshot of the fully resolved configuration (defaults included).
    pub config: serde_json::Value,
    /// Input path (as given) -> SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub tool_version: String,
    /// Elapsed seconds; the only non-deterministic field in any output.
    pub wall_time_s: f64,
}

/// Accumulates manifest contents while a subcommand runs.
pub struct ManifestBuilder {
    command: String,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: serde_json::Value) -> ManifestBuilder {
        ManifestBuilder {
            command: command.to_string(),
            config,
            inputs: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    /// Digest one input file.
    pub fn input_file(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), io::sha256_file(path)?);
        Ok(())
    }

    /// Digest every regular file directly inside `dir` (sorted by name).
    pub fn input_dir(&mut self, dir: &Path) -> Result<()> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if path.is_file() {
                files.push(path);
            }
        }
        files.sort();
        for path in files {
            self.input_file(&path)?;
        }
        Ok(())
    }

    /// Record an already-computed digest (e.g. from a module's own manifest).
    pub fn input_digest(&mut self, label: &str, digest: &str) {
        self.inputs.insert(label.to_string(), digest.to_string());
    }

    /// Write `run_manifest.json` into `out_dir`. Call last, after all
    /// outputs are on disk.
    pub fn write(self, out_dir: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            inputs: self.inputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        io::write_json_pretty(&out_dir.join("run_manifest.json"), &manifest)
    }
}
