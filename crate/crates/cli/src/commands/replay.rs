use std::collections::BTreeMap;

use super::dispatch;
use crate::error::{CliError, CliResult, Failure};
use crate::manifest::{read_manifest, MANIFEST_FILE};
use crate::output::file_digest;
use crate::{Command, ReplayArgs};

/// Re-executes a recorded invocation with its recorded seed and checks
/// that inputs and outputs carry the recorded digests.
pub fn run(args: &ReplayArgs) -> CliResult<()> {
    let recorded = read_manifest(&args.manifest)?;
    for input in &recorded.inputs {
        let digest = file_digest(std::path::Path::new(&input.path))?;
        if digest != input.sha256 {
            return Err(CliError::new(Failure::Mismatch, format!("input {} changed since the recorded run", input.path)));
        }
    }

    let mut invocation = recorded.invocation.clone();
    if let Some(out) = &args.out {
        crate::output::create_dir(out)?;
        let out = crate::manifest::absolute(out)?;
        invocation["out"] = serde_json::Value::String(out.display().to_string());
    }
    let cmd: Command = serde_json::from_value(invocation)
        .map_err(|e| CliError::parse(format!("{}: invalid invocation: {e}", args.manifest.display())))?;
    let out_dir = match &cmd {
        Command::Simulate(a) => a.out.clone(),
        Command::Fit(a) => a.out.clone(),
        Command::Derive(a) => a.out.clone(),
        Command::Experiment(a) => a.out.clone(),
        Command::Replay(_) => return Err(CliError::parse("a replay manifest cannot itself be replayed")),
    };

    match dispatch(&cmd, Some(recorded.seed)) {
        Ok(()) => {}
        // Convergence failures still write every output.
        Err(e) if e.kind == Failure::Convergence => {}
        Err(e) => return Err(e),
    }

    let replayed = read_manifest(&out_dir.join(MANIFEST_FILE))?;
    let expected: BTreeMap<_, _> =
        recorded.outputs.iter().filter(|f| f.path != MANIFEST_FILE).map(|f| (&f.path, &f.sha256)).collect();
    let actual: BTreeMap<_, _> =
        replayed.outputs.iter().filter(|f| f.path != MANIFEST_FILE).map(|f| (&f.path, &f.sha256)).collect();
    let mut mismatched: Vec<String> = expected
        .iter()
        .filter(|(path, digest)| actual.get(*path) != Some(*digest))
        .map(|(path, _)| path.to_string())
        .collect();
    mismatched.extend(actual.keys().filter(|p| !expected.contains_key(*p)).map(|p| p.to_string()));
    if !mismatched.is_empty() {
        return Err(CliError::new(Failure::Mismatch, format!("outputs differ from the recorded run: {}", mismatched.join(", "))));
    }
    println!("replay of {} reproduced {} output files", args.manifest.display(), expected.len());
    Ok(())
}
