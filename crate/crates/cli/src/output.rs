//! File output helpers. Tables are CSV with an optional first line
//! `# {json}` carrying metadata.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path.display(), e))?;
    Ok(sha256_hex(&bytes))
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

/// Collects the files a command writes so the manifest can digest them.
#[derive(Debug)]
pub struct OutputDir {
    pub root: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        create_dir(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(path.display(), e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(name, e))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Single-line JSON, for large machine-read files.
    pub fn write_json_compact(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string(value).map_err(|e| CliError::io(name, e))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `columns` (equal length) under `headers`, preceded by the
    /// metadata line when `meta` is not null.
    pub fn write_table(&mut self, name: &str, meta: &Value, headers: &[&str], columns: &[Vec<String>]) -> CliResult<()> {
        let mut buf = Vec::new();
        if !meta.is_null() {
            writeln!(buf, "# {meta}").map_err(|e| CliError::io(name, e))?;
        }
        writeln!(buf, "{}", headers.join(",")).map_err(|e| CliError::io(name, e))?;
        let rows = columns.first().map_or(0, Vec::len);
        for i in 0..rows {
            let row: Vec<&str> = columns.iter().map(|c| c[i].as_str()).collect();
            writeln!(buf, "{}", row.join(",")).map_err(|e| CliError::io(name, e))?;
        }
        self.write_bytes(name, &buf)
    }
}

pub fn fmt_col(values: &[f64]) -> Vec<String> {
    values.iter().map(f64::to_string).collect()
}
