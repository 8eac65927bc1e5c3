//! Subcommand implementations. Each command normalizes its paths, runs, and
//! finishes by writing a manifest into its output directory.

mod derive;
mod experiment;
mod fit;
mod replay;
mod simulate;

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::manifest::absolute;
use crate::output::OutputDir;
use crate::Command;

pub fn dispatch(cmd: &Command, seed: Option<u64>) -> CliResult<()> {
    match cmd {
        Command::Simulate(a) => simulate::run(a, seed),
        Command::Fit(a) => fit::run(a, seed),
        Command::Derive(a) => derive::run(a),
        Command::Experiment(a) => experiment::run(a, seed),
        Command::Replay(a) => replay::run(a),
    }
}

/// Creates the output directory and returns it with its absolute path.
fn output_dir(path: &Path) -> CliResult<(OutputDir, PathBuf)> {
    crate::output::create_dir(path)?;
    let root = absolute(path)?;
    Ok((OutputDir::create(&root)?, root))
}

fn invocation(cmd: Command) -> CliResult<Value> {
    serde_json::to_value(cmd).map_err(|e| CliError::io("invocation", e))
}

/// Reads a JSON configuration file; absent fields take their defaults.
fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> CliResult<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CliError::io(path.display(), e))
}
