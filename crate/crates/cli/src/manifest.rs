//! Run manifests: everything needed to re-execute a command and check that
//! it reproduced the same bytes.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::output::{file_digest, sha256_hex, OutputDir};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub started_unix_seconds: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Parsed subcommand arguments, replayable as-is.
    pub invocation: Value,
    pub seed: u64,
    /// Effective configuration after defaults and overrides.
    pub config: Value,
    pub config_hash: String,
    /// Command-specific facts about the run, such as transition counts.
    pub results: Value,
    pub inputs: Vec<FileDigest>,
    /// Output files relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub threads: usize,
    pub timings: Timings,
}

/// Accumulates manifest fields while a command runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    command: String,
    invocation: Value,
    seed: u64,
    config: Value,
    results: serde_json::Map<String, Value>,
    inputs: Vec<FileDigest>,
    started: Instant,
    started_unix: u64,
}

impl ManifestBuilder {
    pub fn new(command: &str, invocation: Value, seed: u64) -> Self {
        Self {
            command: command.into(),
            invocation,
            seed,
            config: Value::Null,
            results: serde_json::Map::new(),
            inputs: Vec::new(),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn config(&mut self, config: &impl Serialize) -> CliResult<()> {
        self.config = serde_json::to_value(config).map_err(|e| CliError::io("config", e))?;
        Ok(())
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.into(), value.into());
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256: file_digest(path)? });
        Ok(())
    }

    /// Digests every written file and stores the manifest next to them.
    pub fn finish(self, out: &mut OutputDir) -> CliResult<RunManifest> {
        let outputs = out
            .written
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.strip_prefix(&out.root).unwrap_or(p).display().to_string(),
                    sha256: file_digest(p)?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            invocation: self.invocation,
            seed: self.seed,
            config_hash: config_hash(&self.config),
            config: self.config,
            results: Value::Object(self.results),
            inputs: self.inputs,
            outputs,
            threads: rayon::current_num_threads(),
            timings: Timings {
                started_unix_seconds: self.started_unix,
                wall_seconds: self.started.elapsed().as_secs_f64(),
            },
        };
        out.write_json(MANIFEST_FILE, &manifest)?;
        Ok(manifest)
    }
}

pub fn config_hash(config: &Value) -> String {
    sha256_hex(config.to_string().as_bytes())
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

/// Absolute form of a user-supplied input path, so manifests replay from
/// any working directory.
pub fn absolute(path: &Path) -> CliResult<PathBuf> {
    std::fs::canonicalize(path).map_err(|e| CliError::io(path.display(), e))
}
