use serde_json::json;

use landscaper::inference::{fit, FitConfig};
use landscaper::tsdata::{filter_by_timestep, AbundanceTable, Pseudocount, TimeSeriesCollection};

use super::{invocation, open, output_dir, read_config};
use crate::error::{CliError, CliResult, Failure};
use crate::manifest::{absolute, ManifestBuilder};
use crate::output::fmt_col;
use crate::{Command, FitArgs};

fn load(args: &FitArgs) -> CliResult<TimeSeriesCollection> {
    let file = open(&args.data)?;
    match &args.clr {
        Some(taxon) => {
            let table = AbundanceTable::read_csv(file)?;
            let policy = args.pseudocount.map_or(Pseudocount::HalfMinPositive, Pseudocount::Fixed);
            Ok(table.clr_collection(taxon, policy)?)
        }
        None => Ok(TimeSeriesCollection::read_csv(file)?),
    }
}

pub fn run(args: &FitArgs, seed: Option<u64>) -> CliResult<()> {
    let data = absolute(&args.data)?;
    let config = args.config.as_deref().map(absolute).transpose()?;
    let mut cfg: FitConfig = match &config {
        Some(path) => read_config(path)?,
        None => FitConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = args.chains {
        cfg.n_chains = n;
    }
    if let Some(n) = args.iterations {
        cfg.n_iterations = n;
    }
    cfg.validate().map_err(|e| CliError::parse(e.to_string()))?;

    let loaded = load(args)?;
    let loaded_transitions = loaded.n_transitions();
    let collection = match args.max_dt {
        Some(max_dt) => filter_by_timestep(&loaded, max_dt)?,
        None => loaded,
    };

    let posterior = fit(&collection, &cfg)?;
    for w in posterior.warnings() {
        eprintln!("warning: {w}");
    }

    let (mut out, root) = output_dir(&args.out)?;
    let normalized = FitArgs { data: data.clone(), config: config.clone(), out: root, ..args.clone() };
    let mut manifest = ManifestBuilder::new("fit", invocation(Command::Fit(normalized))?, cfg.seed);
    manifest.config(&cfg)?;
    manifest.input(&data)?;
    if let Some(path) = &config {
        manifest.input(path)?;
    }

    out.write_json_compact("posterior.json", &posterior)?;

    let meta = json!({
        "n_draws": posterior.draws.len(),
        "n_transitions": posterior.n_transitions,
        "converged": posterior.converged,
        "max_rhat": posterior.max_rhat(),
    });
    let mut summary = format!("# {meta}\n").into_bytes();
    posterior.write_summary_csv(&mut summary).map_err(|e| CliError::io("summary.csv", e))?;
    out.write_bytes("summary.csv", &summary)?;

    let d = &posterior.diagnostics;
    out.write_table(
        "diagnostics.csv",
        &serde_json::Value::Null,
        &["name", "rhat", "ess"],
        &[
            d.iter().map(|p| p.name.clone()).collect(),
            fmt_col(&d.iter().map(|p| p.rhat).collect::<Vec<_>>()),
            fmt_col(&d.iter().map(|p| p.ess).collect::<Vec<_>>()),
        ],
    )?;

    manifest.result("n_transitions_loaded", loaded_transitions);
    manifest.result("n_transitions", posterior.n_transitions);
    manifest.result("converged", posterior.converged);
    manifest.result("max_rhat", posterior.max_rhat());
    manifest.result("divergences", posterior.divergences);
    manifest.result("warnings", posterior.warnings());
    manifest.finish(&mut out)?;

    if !posterior.converged && !args.allow_nonconverged {
        return Err(CliError::new(
            Failure::Convergence,
            format!(
                "max R-hat {:.3} exceeds {}; outputs were written to {} (pass --allow-nonconverged to accept)",
                posterior.max_rhat(),
                landscaper::inference::RHAT_WARNING,
                out.root.display()
            ),
        ));
    }
    Ok(())
}
