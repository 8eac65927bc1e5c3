use rayon::prelude::*;
use serde_json::{json, Value};

use landscaper::derived::{
    effective_potential, exit_time_band, multistability_posterior, potential, stationary_density, tipping_region,
    BandMode, CurvePair, DerivedError,
};
use landscaper::inference::{Curve, Posterior};
use landscaper::stats::quantile;

use super::{invocation, output_dir};
use crate::error::{CliError, CliResult};
use crate::manifest::{absolute, ManifestBuilder};
use crate::output::{fmt_col, OutputDir};
use crate::{BandModeArg, Command, DeriveArgs};

/// Per-draw quantiles reported next to posterior-mean curves.
const BAND_QUANTILES: [f64; 3] = [0.025, 0.5, 0.975];

fn read_posterior(path: &std::path::Path) -> CliResult<Posterior> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let p: Posterior =
        serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{}: invalid posterior: {e}", path.display())))?;
    if p.draws.is_empty() {
        return Err(CliError::precondition(format!("{}: posterior has no draws", path.display())));
    }
    let n = p.grid.len();
    if let Some(d) = p.draws.iter().find(|d| d.drift.len() != n || d.diffusion.len() != n) {
        return Err(CliError::parse(format!(
            "{}: draw from chain {} does not match the {n}-point grid",
            path.display(),
            d.chain
        )));
    }
    Ok(p)
}

/// Pointwise quantile columns over the rows of `curves`.
fn band_columns(curves: &[Vec<f64>], n: usize) -> Vec<Vec<String>> {
    BAND_QUANTILES
        .iter()
        .map(|&q| fmt_col(&(0..n).map(|i| quantile(&curves.iter().map(|c| c[i]).collect::<Vec<_>>(), q)).collect::<Vec<_>>()))
        .collect()
}

fn band_headers(name: &str) -> Vec<String> {
    BAND_QUANTILES.iter().map(|q| format!("{name}_q{}", q * 100.0)).collect()
}

fn write_landscapes(out: &mut OutputDir, p: &Posterior) -> CliResult<()> {
    let n = p.grid.len();
    let mean = CurvePair::new(p.grid.clone(), p.mean_curve(Curve::Drift), p.mean_curve(Curve::Diffusion))?;
    let sd = stationary_density(&mean)?;
    let u_eff = effective_potential(&sd);
    let u = potential(&mean);

    let per_draw: Vec<Result<(Vec<f64>, Vec<f64>, Vec<f64>), DerivedError>> = p
        .draws
        .par_iter()
        .map(|d| {
            let cp = CurvePair::new(p.grid.clone(), d.drift.clone(), d.diffusion.clone())?;
            let sd = stationary_density(&cp)?;
            let ue = effective_potential(&sd);
            Ok((sd.density, ue, potential(&cp)))
        })
        .collect();
    let failed = per_draw.iter().filter(|r| r.is_err()).count();
    let ok: Vec<_> = per_draw.into_iter().filter_map(Result::ok).collect();
    if ok.is_empty() {
        return Err(DerivedError::AllDrawsInvalid(p.draws.len()).into());
    }
    let densities: Vec<Vec<f64>> = ok.iter().map(|r| r.0.clone()).collect();
    let eff: Vec<Vec<f64>> = ok.iter().map(|r| r.1.clone()).collect();
    let pots: Vec<Vec<f64>> = ok.iter().map(|r| r.2.clone()).collect();

    let meta = json!({
        "curve": "posterior mean drift and diffusion",
        "normalization": sd.normalization,
        "n_draws": p.draws.len(),
        "n_failed_draws": failed,
    });
    let mut headers = vec!["x".to_string(), "density".into(), "effective_potential".into()];
    headers.extend(band_headers("density"));
    headers.extend(band_headers("effective_potential"));
    let mut cols = vec![fmt_col(&p.grid), fmt_col(&sd.density), fmt_col(&u_eff)];
    cols.extend(band_columns(&densities, n));
    cols.extend(band_columns(&eff, n));
    let h: Vec<&str> = headers.iter().map(String::as_str).collect();
    out.write_table("stationary_density.csv", &meta, &h, &cols)?;

    let meta = json!({
        "curve": "posterior mean drift",
        "reference": "zero at the first grid point",
        "n_draws": p.draws.len(),
        "n_failed_draws": failed,
    });
    let mut headers = vec!["x".to_string(), "potential".into()];
    headers.extend(band_headers("potential"));
    let mut cols = vec![fmt_col(&p.grid), fmt_col(&u)];
    cols.extend(band_columns(&pots, n));
    let h: Vec<&str> = headers.iter().map(String::as_str).collect();
    out.write_table("potential.csv", &meta, &h, &cols)
}

fn write_multistability(out: &mut OutputDir, p: &Posterior) -> CliResult<()> {
    let ms = multistability_posterior(p)?;
    let meta = json!({
        "n_draws": ms.n_draws,
        "n_valid": ms.n_valid,
        "discarded_fraction": ms.discarded_fraction,
        "mode": ms.mode(),
    });
    let counts: Vec<String> = (0..ms.probabilities.len()).map(|k| k.to_string()).collect();
    out.write_table("multistability.csv", &meta, &["n_stable", "probability"], &[counts, fmt_col(&ms.probabilities)])
}

/// Items that legitimately cannot be computed for this posterior; any other
/// error aborts the command.
fn skippable(e: &DerivedError) -> bool {
    matches!(
        e,
        DerivedError::InsufficientBistable { .. }
            | DerivedError::NotBistable { .. }
            | DerivedError::TooFewRetained { .. }
            | DerivedError::TippingOutsideGrid(_)
            | DerivedError::Singular { .. }
    )
}

fn write_tipping(out: &mut OutputDir, p: &Posterior, notices: &mut Vec<String>) -> CliResult<()> {
    match tipping_region(p) {
        Ok(t) => {
            let meta = json!({ "n_draws": t.n_draws });
            out.write_table(
                "tipping_region.csv",
                &meta,
                &["mean", "q25", "q75", "q2.5", "q97.5"],
                &[
                    fmt_col(&[t.mean]),
                    fmt_col(&[t.interval_50.0]),
                    fmt_col(&[t.interval_50.1]),
                    fmt_col(&[t.interval_95.0]),
                    fmt_col(&[t.interval_95.1]),
                ],
            )
        }
        Err(e) if skippable(&e) => {
            notices.push(format!("tipping_region.csv skipped: {e}"));
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

fn write_exit_band(out: &mut OutputDir, p: &Posterior, mode: BandMode, notices: &mut Vec<String>) -> CliResult<()> {
    match exit_time_band(p, mode) {
        Ok(b) => {
            let meta = json!({
                "tipping": b.tipping,
                "stable_points": [b.stable_points.0, b.stable_points.1],
                "n_retained": b.n_retained,
                "n_draws": b.n_draws,
                "mode": b.mode,
                "boundary_conditions": b.boundary_conditions,
            });
            out.write_table(
                "exit_time_band.csv",
                &meta,
                &["x", "mean", "lower_60", "lower_40"],
                &[fmt_col(&b.grid), fmt_col(&b.mean), fmt_col(&b.lower_60), fmt_col(&b.lower_40)],
            )
        }
        Err(e) if skippable(&e) => {
            notices.push(format!("exit_time_band.csv skipped: {e}"));
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn run(args: &DeriveArgs) -> CliResult<()> {
    let path = absolute(&args.posterior)?;
    let posterior = read_posterior(&path)?;
    let mode = match args.band_mode {
        BandModeArg::Pointwise => BandMode::Pointwise,
        BandModeArg::CurveWise => BandMode::CurveWise,
    };

    let (mut out, root) = output_dir(&args.out)?;
    let normalized = DeriveArgs { posterior: path.clone(), out: root, ..args.clone() };
    let mut manifest = ManifestBuilder::new("derive", invocation(Command::Derive(normalized))?, posterior.config.seed);
    manifest.config(&json!({ "band_mode": mode }))?;
    manifest.input(&path)?;

    let mut notices = Vec::new();
    write_landscapes(&mut out, &posterior)?;
    write_multistability(&mut out, &posterior)?;
    write_tipping(&mut out, &posterior, &mut notices)?;
    write_exit_band(&mut out, &posterior, mode, &mut notices)?;
    if !notices.is_empty() {
        for n in &notices {
            eprintln!("notice: {n}");
        }
        out.write_bytes("notices.txt", format!("{}\n", notices.join("\n")).as_bytes())?;
    }
    if !posterior.converged {
        eprintln!("warning: posterior did not converge (max R-hat {:.3})", posterior.max_rhat());
    }

    manifest.result("notices", notices.clone());
    manifest.result("converged_input", posterior.converged);
    manifest.result("files", Value::from(out.written.len()));
    manifest.finish(&mut out)?;
    Ok(())
}
