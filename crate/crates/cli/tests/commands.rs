use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_landscaper"));
    c.env_remove("LANDSCAPER_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["--seed", "11", "simulate", "--series", "50", "--points", "2", "--dt", "0.2", "--out", p(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn fit(dir: &Path, data: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["--seed", "5", "fit", "--data", p(data), "--chains", "2", "--iterations", "150", "--out", p(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn simulate_writes_one_row_per_observation() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), "sim", &[]);
    let text = fs::read_to_string(sim.join("data.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 100);
    assert!(sim.join("truth.json").exists());
    let m = manifest(&sim);
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["results"]["n_transitions"], 50);
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a", &[]);
    let b = simulate(dir.path(), "b", &[]);
    assert_eq!(fs::read(a.join("data.csv")).unwrap(), fs::read(b.join("data.csv")).unwrap());
    assert_eq!(fs::read(a.join("truth.json")).unwrap(), fs::read(b.join("truth.json")).unwrap());
}

#[test]
fn unknown_model_is_a_parse_error_naming_the_token() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--model", "lorenz", "--series", "5", "--dt", "0.1", "--out", p(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`lorenz`"));
}

#[test]
fn malformed_csv_row_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "unit_id,time,value\na,0,1.0\na,1,oops\na,2,0.5\n").unwrap();
    let out = run(&["fit", "--data", p(&data), "--out", p(&dir.path().join("fit"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn too_few_transitions_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("small.csv");
    fs::write(&data, "unit_id,time,value\na,0,1.0\na,1,0.8\nb,0,0.1\nb,1,0.3\n").unwrap();
    let out = run(&["fit", "--data", p(&data), "--out", p(&dir.path().join("fit"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fit_writes_posterior_bundle_and_max_dt_reduces_transitions() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("gappy.csv");
    // 30 units sampled at t = 0, 1, 2, 5: the last gap exceeds max_dt = 2.
    let mut text = String::from("unit_id,time,value\n");
    for u in 0..30 {
        for (k, t) in [0.0, 1.0, 2.0, 5.0].iter().enumerate() {
            let v = ((u * 7 + k * 3) % 11) as f64 / 5.0 - 1.0;
            text.push_str(&format!("u{u},{t},{v}\n"));
        }
    }
    fs::write(&data, text).unwrap();

    let full = fit(dir.path(), &data, "full", &["--allow-nonconverged"]);
    let cut = fit(dir.path(), &data, "cut", &["--allow-nonconverged", "--max-dt", "2"]);
    for f in ["posterior.json", "summary.csv", "diagnostics.csv", "manifest.json"] {
        assert!(full.join(f).exists(), "{f} missing");
    }
    assert_eq!(manifest(&full)["results"]["n_transitions"], 90);
    assert_eq!(manifest(&cut)["results"]["n_transitions"], 60);

    let diag = fs::read_to_string(full.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("name,rhat,ess\n"));
    for h in ["log_drift_sigma_q2", "log_drift_l", "log_drift_sigma_b2", "log_drift_sigma_l2", "log_diff_sigma_q2", "log_diff_l"] {
        assert!(diag.lines().any(|l| l.starts_with(&format!("{h},"))), "{h} missing");
    }
    let summary = fs::read_to_string(full.join("summary.csv")).unwrap();
    assert!(summary.starts_with("# {"));
}

#[test]
fn derive_on_unistable_data_skips_the_exit_band_with_a_notice() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ou.csv");
    // Strongly mean-reverting series: every fitted drift has a single root.
    let mut text = String::from("unit_id,time,value\n");
    for u in 0..40 {
        let x0 = (u as f64 - 20.0) / 10.0;
        text.push_str(&format!("u{u},0,{x0}\nu{u},1,{}\n", 0.1 * x0 + 0.01 * ((u % 5) as f64 - 2.0)));
    }
    fs::write(&data, text).unwrap();
    let fitted = fit(dir.path(), &data, "fit", &["--allow-nonconverged"]);
    let out = dir.path().join("derived");
    ok(&["derive", "--posterior", p(&fitted.join("posterior.json")), "--out", p(&out)]);
    for f in ["stationary_density.csv", "potential.csv", "multistability.csv", "notices.txt", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(!out.join("exit_time_band.csv").exists());
    let notices = fs::read_to_string(out.join("notices.txt")).unwrap();
    assert!(notices.contains("exit_time_band.csv skipped"));
    for f in ["stationary_density.csv", "potential.csv", "multistability.csv"] {
        let first = fs::read_to_string(out.join(f)).unwrap();
        assert!(first.starts_with("# {"), "{f} lacks a JSON header");
    }

    let again = dir.path().join("derived2");
    ok(&["derive", "--posterior", p(&fitted.join("posterior.json")), "--out", p(&again)]);
    for f in ["stationary_density.csv", "potential.csv", "multistability.csv", "notices.txt"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn derive_rejects_an_invalid_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("posterior.json");
    fs::write(&bad, "{\"grid\": [1, 2]}").unwrap();
    let out = run(&["derive", "--posterior", p(&bad), "--out", p(&dir.path().join("d"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coverage_with_one_replicate_writes_agreement_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("coverage.json");
    fs::write(&cfg, r#"{"model": "cusp", "total_time": 20, "budget_step": 5}"#).unwrap();
    let out = dir.path().join("cov");
    ok(&["--seed", "2", "experiment", "coverage", "--config", p(&cfg), "--replicates", "1", "--out", p(&out)]);
    let text = fs::read_to_string(out.join("coverage.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert_eq!(lines.next().unwrap(), "budget,agreement_short,agreement_long");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 3));
}

#[test]
fn tpr_grid_two_by_two_writes_four_entries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tpr.json");
    fs::write(
        &cfg,
        r#"{"series_counts": [10, 15], "timestep_fractions": [0.5, 0.1], "pilot_datasets": 2,
            "fit": {"n_chains": 1, "n_iterations": 100, "anchors": {"kind": "equispaced", "count": 8}, "grid_points": 40}}"#,
    )
    .unwrap();
    let out = dir.path().join("tpr");
    ok(&["experiment", "tpr-grid", "--config", p(&cfg), "--replicates", "2", "--out", p(&out)]);
    let text = fs::read_to_string(out.join("tpr.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let cells: Vec<f64> = r.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 2);
        assert!(cells.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn invalid_experiment_name_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["experiment", "nonsense", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replay_reproduces_outputs_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), "sim", &[]);
    let fitted = fit(dir.path(), &sim.join("data.csv"), "fit", &["--allow-nonconverged", "--threads", "1"]);
    let before = fs::read(fitted.join("posterior.json")).unwrap();
    ok(&["--threads", "3", "replay", p(&fitted.join("manifest.json"))]);
    assert_eq!(fs::read(fitted.join("posterior.json")).unwrap(), before);

    let elsewhere = dir.path().join("replayed");
    ok(&["--threads", "2", "replay", p(&fitted.join("manifest.json")), "--out", p(&elsewhere)]);
    for f in ["posterior.json", "summary.csv", "diagnostics.csv"] {
        assert_eq!(fs::read(fitted.join(f)).unwrap(), fs::read(elsewhere.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn replay_detects_modified_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), "sim", &[]);
    let data = dir.path().join("data.csv");
    fs::copy(sim.join("data.csv"), &data).unwrap();
    let fitted = fit(dir.path(), &data, "fit", &["--allow-nonconverged"]);
    fs::write(&data, "unit_id,time,value\n").unwrap();
    let out = run(&["replay", p(&fitted.join("manifest.json"))]);
    assert_eq!(out.status.code(), Some(7));
}
