//! Simulation studies: state-space coverage of short versus long series,
//! and the true-positive rate of the multistability call.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derived::multistability_posterior;
use crate::inference::{fit, FitConfig};
use crate::rng;
use crate::sim::{
    generate_short_series, integrate, CuspStationary, GenerateConfig, SdeModel, SimError, StationaryStarter, INTERNAL_DT,
};
use crate::stats::{interp, mean};
use crate::tsdata::{characteristic_timescale, DataError};

/// Floor applied to both densities inside [`kl_divergence`].
pub const KL_FLOOR: f64 = 1e-12;

/// Timestep axis, as fractions of `t_c`, used when none is given.
pub const DEFAULT_TIMESTEP_FRACTIONS: [f64; 7] = [1.0, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("densities are tabulated on different grids ({p} vs {q} cells)")]
    GridMismatch { p: usize, q: usize },
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("model '{0}' has no analytic stationary density")]
    NoStationaryDensity(String),
    #[error("model '{0}' has no ground-truth label")]
    Unlabeled(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// `Σ p ln(p/q) Δx` over cells of widths `dx`, both densities floored at
/// [`KL_FLOOR`] inside the logarithm.
pub fn kl_divergence(p: &[f64], q: &[f64], dx: &[f64]) -> Result<f64, ExperimentError> {
    if p.len() != q.len() || p.len() != dx.len() {
        return Err(ExperimentError::GridMismatch { p: p.len(), q: q.len().min(dx.len()) });
    }
    Ok(p.iter()
        .zip(q)
        .zip(dx)
        .filter(|((p, _), _)| **p > 0.0)
        .map(|((p, q), w)| p * (p.max(KL_FLOOR) / q.max(KL_FLOOR)).ln() * w)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageConfig {
    pub total_time: f64,
    pub replicates: usize,
    /// Increment between successive budgets.
    pub budget_step: f64,
    pub points_per_short_series: usize,
    /// Observation step shared by both conditions.
    pub step: f64,
    pub n_bins: usize,
    /// Stationary mass excluded from each tail when placing the bins.
    pub tail_mass: f64,
    pub seed: u64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            total_time: 250.0,
            replicates: 50,
            budget_step: 1.0,
            points_per_short_series: 5,
            step: INTERNAL_DT,
            n_bins: 40,
            tail_mass: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub budgets: Vec<f64>,
    /// Mean agreement over replicates, per budget.
    pub agreement_short: Vec<f64>,
    pub agreement_long: Vec<f64>,
    pub replicates: usize,
    /// Agreement curves of every replicate set.
    pub replicate_short: Vec<Vec<f64>>,
    pub replicate_long: Vec<Vec<f64>>,
}

impl CoverageResult {
    /// Fraction of replicate sets whose mean short-series agreement over the
    /// final half of budgets is at least the long-series one.
    pub fn short_wins_fraction(&self) -> f64 {
        let start = self.budgets.len() / 2;
        let wins = self
            .replicate_short
            .iter()
            .zip(&self.replicate_long)
            .filter(|(s, l)| mean(&s[start..]) >= mean(&l[start..]))
            .count();
        wins as f64 / self.replicates.max(1) as f64
    }
}

/// Equal-width bins over the central stationary mass and the bin-averaged
/// reference density, renormalized to the bins.
struct Binning {
    lo: f64,
    width: f64,
    reference: Vec<f64>,
}

impl Binning {
    fn new(st: &CuspStationary, n_bins: usize, tail: f64) -> Result<Self, SimError> {
        let lo = st.inverse_cdf(tail)?;
        let hi = st.inverse_cdf(1.0 - tail)?;
        let width = (hi - lo) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins).map(|j| st_cdf(st, lo + j as f64 * width)).collect();
        let inside = edges[n_bins] - edges[0];
        let reference = edges.windows(2).map(|e| (e[1] - e[0]) / (inside * width)).collect();
        Ok(Self { lo, width, reference })
    }

    fn bin(&self, x: f64) -> Option<usize> {
        let j = ((x - self.lo) / self.width).floor();
        (j >= 0.0 && (j as usize) < self.reference.len()).then_some(j as usize)
    }

    fn kl(&self, counts: &[usize]) -> f64 {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return f64::NAN;
        }
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / (total as f64 * self.width)).collect();
        let dx = vec![self.width; p.len()];
        kl_divergence(&p, &self.reference, &dx).unwrap_or(f64::NAN).max(0.0)
    }
}

fn st_cdf(st: &CuspStationary, x: f64) -> f64 {
    interp(&st.grid, &st.cdf, x)
}

/// KL curves of one replicate set, long then short.
fn coverage_replicate(
    model: &SdeModel,
    binning: &Binning,
    cfg: &CoverageConfig,
    n_budgets: usize,
    per_budget: usize,
    rep: u64,
) -> Result<(Vec<f64>, Vec<f64>), ExperimentError> {
    let gen = GenerateConfig { internal_dt: cfg.step, ..GenerateConfig::default() };
    let starter = StationaryStarter::new(model, &gen);
    let n_obs = n_budgets * per_budget;

    let mut rng = rng::stream(cfg.seed, &[rep, 0]);
    let x0 = starter.draw(&mut rng)?;
    let long = integrate(model, x0, cfg.step, n_obs - 1, &mut rng)?;

    let pts = cfg.points_per_short_series;
    let short: Vec<f64> = (0..n_obs / pts)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, &[rep, 1, i as u64]);
            let x0 = starter.draw(&mut rng)?;
            integrate(model, x0, cfg.step, pts - 1, &mut rng)
        })
        .collect::<Result<Vec<_>, SimError>>()?
        .concat();

    let curve = |obs: &[f64]| -> Vec<f64> {
        let mut counts = vec![0usize; binning.reference.len()];
        (0..n_budgets)
            .map(|b| {
                for &x in &obs[b * per_budget..(b + 1) * per_budget] {
                    if let Some(j) = binning.bin(x) {
                        counts[j] += 1;
                    }
                }
                binning.kl(&counts)
            })
            .collect()
    };
    Ok((curve(&long), curve(&short)))
}

/// Long continuous trajectories versus collections of independently
/// started short series with the same time budget. Short series consume
/// `points_per_short_series · step` of the budget each, so both conditions
/// see the same number of observations at every budget.
pub fn coverage_experiment(model: &SdeModel, cfg: &CoverageConfig) -> Result<CoverageResult, ExperimentError> {
    let p = model.cusp_params().ok_or_else(|| ExperimentError::NoStationaryDensity(model.name().into()))?;
    let bad = |m: &str| Err(ExperimentError::InvalidConfig(m.into()));
    if cfg.replicates == 0 {
        return bad("replicates must be at least 1");
    }
    if cfg.points_per_short_series < 2 || cfg.n_bins == 0 {
        return bad("points_per_short_series must be at least 2 and n_bins at least 1");
    }
    if !(cfg.step > 0.0 && cfg.budget_step > 0.0 && cfg.total_time >= cfg.budget_step) {
        return bad("step, budget_step and total_time must be positive with total_time ≥ budget_step");
    }
    if !(cfg.tail_mass > 0.0 && cfg.tail_mass < 0.5) {
        return bad("tail_mass must lie in (0, 0.5)");
    }
    let ratio = cfg.budget_step / (cfg.step * cfg.points_per_short_series as f64);
    if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
        return bad("budget_step must be a whole multiple of points_per_short_series · step");
    }
    let n_budgets = (cfg.total_time / cfg.budget_step + 1e-9).floor() as usize;
    let per_budget = ratio.round() as usize * cfg.points_per_short_series;

    let binning = Binning::new(&CuspStationary::new(&p), cfg.n_bins, cfg.tail_mass)?;
    let curves: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|rep| coverage_replicate(model, &binning, cfg, n_budgets, per_budget, rep))
        .collect::<Result<_, _>>()?;

    let agreement = |kl: &[f64], max: f64| -> Vec<f64> {
        kl.iter().map(|k| if max > 0.0 { (1.0 - k / max).clamp(0.0, 1.0) } else { 1.0 }).collect()
    };
    let mut replicate_short = Vec::with_capacity(curves.len());
    let mut replicate_long = Vec::with_capacity(curves.len());
    for (long, short) in &curves {
        let max = long.iter().chain(short).copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
        replicate_long.push(agreement(long, max));
        replicate_short.push(agreement(short, max));
    }
    let average = |reps: &[Vec<f64>]| -> Vec<f64> {
        (0..n_budgets).map(|b| reps.iter().map(|r| r[b]).sum::<f64>() / reps.len() as f64).collect()
    };
    Ok(CoverageResult {
        budgets: (1..=n_budgets).map(|b| b as f64 * cfg.budget_step).collect(),
        agreement_short: average(&replicate_short),
        agreement_long: average(&replicate_long),
        replicates: cfg.replicates,
        replicate_short,
        replicate_long,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TprConfig {
    pub series_counts: Vec<usize>,
    /// Observation steps as fractions of the characteristic timescale.
    pub timestep_fractions: Vec<f64>,
    pub replicates: usize,
    pub points_per_series: usize,
    /// Pilot datasets averaged to estimate `t_c` for each series count.
    pub pilot_datasets: usize,
    pub fit: FitConfig,
    pub seed: u64,
}

impl Default for TprConfig {
    fn default() -> Self {
        Self {
            series_counts: vec![10, 25, 50, 100],
            timestep_fractions: DEFAULT_TIMESTEP_FRACTIONS.to_vec(),
            replicates: 20,
            points_per_series: 2,
            pilot_datasets: 5,
            fit: FitConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TprGrid {
    pub series_counts: Vec<usize>,
    pub timestep_fractions: Vec<f64>,
    /// Reference `t_c` per series count.
    pub t_c: Vec<f64>,
    /// Observation step per cell, `[series count][fraction]`.
    pub dt: Vec<Vec<f64>>,
    /// True-positive rate per cell.
    pub tpr: Vec<Vec<f64>>,
    /// Replicates whose fit or summary failed, per cell.
    pub failures: Vec<Vec<usize>>,
    pub replicates: usize,
    pub label: usize,
}

/// Mean `t_c` over `n_pilots` datasets of the given geometry simulated at
/// the internal step.
pub fn reference_timescale(
    model: &SdeModel,
    n_series: usize,
    points_per_series: usize,
    n_pilots: usize,
    seed: u64,
) -> Result<f64, ExperimentError> {
    if n_pilots == 0 {
        return Err(ExperimentError::InvalidConfig("at least one pilot dataset is required".into()));
    }
    let t: Vec<f64> = (0..n_pilots as u64)
        .into_par_iter()
        .map(|s| {
            let d = generate_short_series(model, n_series, points_per_series, INTERNAL_DT, rng::derive_seed(seed, &[s]))?;
            Ok(characteristic_timescale(&d.collection)?.t_c)
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(mean(&t))
}

/// `fraction · t_c` rounded to a whole number of internal steps, at least one.
pub fn timestep_for(fraction: f64, t_c: f64) -> f64 {
    (fraction * t_c / INTERNAL_DT).round().max(1.0) * INTERNAL_DT
}

/// Fits `replicates` datasets of short series per (series count, timestep)
/// cell and scores the modal number of stable states against the label.
pub fn tpr_grid(model: &SdeModel, cfg: &TprConfig) -> Result<TprGrid, ExperimentError> {
    let label = model.label().ok_or_else(|| ExperimentError::Unlabeled(model.name().into()))?;
    let bad = |m: &str| Err(ExperimentError::InvalidConfig(m.into()));
    if cfg.replicates == 0 {
        return bad("replicates must be at least 1");
    }
    if cfg.series_counts.is_empty() || cfg.timestep_fractions.is_empty() {
        return bad("series_counts and timestep_fractions must be non-empty");
    }
    if cfg.series_counts.contains(&0) {
        return bad("series counts must be positive");
    }
    if !cfg.timestep_fractions.iter().all(|f| *f > 0.0 && f.is_finite()) {
        return bad("timestep fractions must be positive");
    }
    if cfg.points_per_series < 2 {
        return bad("points_per_series must be at least 2");
    }
    cfg.fit.validate().map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;

    let t_c: Vec<f64> = cfg
        .series_counts
        .iter()
        .enumerate()
        .map(|(row, &n)| {
            reference_timescale(model, n, cfg.points_per_series, cfg.pilot_datasets, rng::derive_seed(cfg.seed, &[0, row as u64]))
        })
        .collect::<Result<_, _>>()?;
    let dt: Vec<Vec<f64>> =
        t_c.iter().map(|&t| cfg.timestep_fractions.iter().map(|&f| timestep_for(f, t)).collect()).collect();

    let (rows, cols) = (cfg.series_counts.len(), cfg.timestep_fractions.len());
    let jobs: Vec<(usize, usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).flat_map(move |c| (0..cfg.replicates).map(move |k| (r, c, k))))
        .collect();
    // Some(true) = correct call, Some(false) = wrong call, None = failure.
    let outcomes: Vec<Option<bool>> = jobs
        .par_iter()
        .map(|&(r, c, k)| {
            let path = [r as u64, c as u64, k as u64];
            let data_seed = rng::derive_seed(cfg.seed, &[1, path[0], path[1], path[2]]);
            let data = generate_short_series(model, cfg.series_counts[r], cfg.points_per_series, dt[r][c], data_seed).ok()?;
            let fit_cfg = FitConfig { seed: rng::derive_seed(cfg.seed, &[2, path[0], path[1], path[2]]), ..cfg.fit };
            let posterior = fit(&data.collection, &fit_cfg).ok()?;
            let m = multistability_posterior(&posterior).ok()?;
            Some(m.mode() == label)
        })
        .collect();

    let mut tpr = vec![vec![0.0; cols]; rows];
    let mut failures = vec![vec![0usize; cols]; rows];
    for (&(r, c, _), o) in jobs.iter().zip(&outcomes) {
        match o {
            Some(true) => tpr[r][c] += 1.0 / cfg.replicates as f64,
            Some(false) => {}
            None => failures[r][c] += 1,
        }
    }
    Ok(TprGrid {
        series_counts: cfg.series_counts.clone(),
        timestep_fractions: cfg.timestep_fractions.clone(),
        t_c,
        dt,
        tpr,
        failures,
        replicates: cfg.replicates,
        label,
    })
}
