use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::json;

use landscaper::experiments::{coverage_experiment, tpr_grid, CoverageConfig, TprConfig};

use super::{invocation, output_dir, read_config};
use crate::error::{CliError, CliResult};
use crate::manifest::{absolute, ManifestBuilder};
use crate::model_spec::{parse_model, DEFAULT_MODEL};
use crate::output::fmt_col;
use crate::{Command, ExperimentArgs, ExperimentName};

/// Replicates per cell selected by `--full`.
pub const FULL_REPLICATES: usize = 100;

/// Experiment configuration file: a model specification next to the
/// experiment's own fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExperimentFile<T> {
    #[serde(default = "default_model")]
    model: String,
    #[serde(flatten)]
    config: T,
}

fn default_model() -> String {
    DEFAULT_MODEL.into()
}

fn load<T: DeserializeOwned + Default>(path: Option<&std::path::Path>) -> CliResult<ExperimentFile<T>> {
    match path {
        Some(p) => read_config(p),
        None => Ok(ExperimentFile { model: default_model(), config: T::default() }),
    }
}

pub fn run(args: &ExperimentArgs, seed: Option<u64>) -> CliResult<()> {
    let config = args.config.as_deref().map(absolute).transpose()?;
    let (mut out, root) = output_dir(&args.out)?;
    let normalized = ExperimentArgs { config: config.clone(), out: root, ..args.clone() };
    let inv = invocation(Command::Experiment(normalized))?;

    match args.name {
        ExperimentName::Coverage => {
            if args.full {
                return Err(CliError::parse("--full applies to tpr-grid only"));
            }
            let mut file: ExperimentFile<CoverageConfig> = load(config.as_deref())?;
            if let Some(s) = seed {
                file.config.seed = s;
            }
            if let Some(r) = args.replicates {
                file.config.replicates = r;
            }
            let model = parse_model(&file.model)?;
            let mut manifest = ManifestBuilder::new("experiment", inv, file.config.seed);
            manifest.config(&file)?;
            if let Some(p) = &config {
                manifest.input(p)?;
            }

            let res = coverage_experiment(&model, &file.config)?;
            let meta = json!({ "model": file.model, "replicates": res.replicates });
            out.write_table(
                "coverage.csv",
                &meta,
                &["budget", "agreement_short", "agreement_long"],
                &[fmt_col(&res.budgets), fmt_col(&res.agreement_short), fmt_col(&res.agreement_long)],
            )?;
            out.write_json("coverage.json", &res)?;
            manifest.result("short_wins_fraction", res.short_wins_fraction());
            manifest.finish(&mut out)?;
        }
        ExperimentName::TprGrid => {
            let mut file: ExperimentFile<TprConfig> = load(config.as_deref())?;
            if let Some(s) = seed {
                file.config.seed = s;
            }
            if args.full {
                file.config.replicates = FULL_REPLICATES;
            }
            if let Some(r) = args.replicates {
                file.config.replicates = r;
            }
            let model = parse_model(&file.model)?;
            let mut manifest = ManifestBuilder::new("experiment", inv, file.config.seed);
            manifest.config(&file)?;
            if let Some(p) = &config {
                manifest.input(p)?;
            }

            let grid = tpr_grid(&model, &file.config)?;
            let meta = json!({
                "model": file.model,
                "label": grid.label,
                "replicates": grid.replicates,
                "rows": "series count",
                "columns": "timestep as a fraction of t_c",
            });
            let mut headers = vec!["n_series".to_string()];
            headers.extend(grid.timestep_fractions.iter().map(|f| f.to_string()));
            let mut cols = vec![grid.series_counts.iter().map(usize::to_string).collect::<Vec<_>>()];
            for j in 0..grid.timestep_fractions.len() {
                cols.push(fmt_col(&grid.tpr.iter().map(|row| row[j]).collect::<Vec<_>>()));
            }
            let h: Vec<&str> = headers.iter().map(String::as_str).collect();
            out.write_table("tpr.csv", &meta, &h, &cols)?;
            out.write_json("tpr.json", &grid)?;
            let failures: usize = grid.failures.iter().flatten().sum();
            manifest.result("failed_replicates", failures);
            manifest.finish(&mut out)?;
        }
    }
    Ok(())
}
