use serde_json::json;

use landscaper::sim::generate_short_series;

use super::{invocation, output_dir};
use crate::error::CliResult;
use crate::manifest::ManifestBuilder;
use crate::model_spec::parse_model;
use crate::{Command, SimulateArgs};

pub fn run(args: &SimulateArgs, seed: Option<u64>) -> CliResult<()> {
    let model = parse_model(&args.model)?;
    let seed = seed.unwrap_or(0);
    let data = generate_short_series(&model, args.series, args.points, args.dt, seed)?;

    let (mut out, root) = output_dir(&args.out)?;
    let normalized = SimulateArgs { out: root, ..args.clone() };
    let mut manifest = ManifestBuilder::new("simulate", invocation(Command::Simulate(normalized))?, seed);
    manifest.config(&json!({
        "model": args.model,
        "series": args.series,
        "points": args.points,
        "dt": args.dt,
    }))?;

    let mut csv = Vec::new();
    data.collection.write_csv(&mut csv)?;
    out.write_bytes("data.csv", &csv)?;
    out.write_json("truth.json", &data.truth)?;

    manifest.result("n_observations", data.collection.n_observations());
    manifest.result("n_transitions", data.collection.n_transitions());
    manifest.finish(&mut out)?;
    Ok(())
}
