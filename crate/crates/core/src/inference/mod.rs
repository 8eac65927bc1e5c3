//! Posterior over drift and diffusion functions: density, sampler,
//! convergence diagnostics and the end-to-end [`fit`].

pub mod diagnostics;
pub mod model;
pub mod nuts;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::{GpError, MAX_POINTS};
use crate::stats;
use crate::tsdata::{to_transitions, TimeSeriesCollection};

pub use diagnostics::{ess, rhat, ParamDiagnostic};
pub use model::{DriftDiffusionTarget, LogPosteriorTerms, ModelState, HYPER_NAMES};
pub use nuts::{hmc_sample, ChainOutput, LogDensity, SamplerConfig};

/// Minimum number of transitions accepted by [`fit`].
pub const MIN_TRANSITIONS: usize = 10;
/// R̂ above this marks the fit as unconverged.
pub const RHAT_WARNING: f64 = 1.05;
/// Fraction of divergent post-warmup transitions that triggers a warning.
pub const DIVERGENCE_WARNING: f64 = 0.01;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("sampler initialization failed after {attempts} jittered attempts")]
    Initialization { attempts: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{found} transitions available, at least {required} required")]
    TooFewTransitions { found: usize, required: usize },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("non-finite log posterior in {component}")]
    NonFinite { component: String },
    #[error("insufficient draws: {0}")]
    InsufficientDraws(String),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Placement of the anchor states carrying the latent function values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnchorPolicy {
    /// `count` equally spaced anchors over the padded data range.
    Equispaced { count: usize },
    /// One anchor per distinct transition start state.
    ObservationSites,
}

impl Default for AnchorPolicy {
    fn default() -> Self {
        AnchorPolicy::Equispaced { count: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub n_chains: usize,
    /// Iterations per chain, warmup included.
    pub n_iterations: usize,
    /// Warmup iterations; `None` means half of `n_iterations`.
    pub n_warmup: Option<usize>,
    pub anchors: AnchorPolicy,
    /// Number of evaluation grid points.
    pub grid_points: usize,
    /// Padding on each side of the data range, as a fraction of its width.
    pub padding: f64,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    /// Diagonal jitter added to the anchor covariance matrices.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_chains: 4,
            n_iterations: 2000,
            n_warmup: None,
            anchors: AnchorPolicy::default(),
            grid_points: 200,
            padding: 0.1,
            target_accept: 0.8,
            max_tree_depth: 10,
            jitter: 1e-6,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        let bad = |m: &str| Err(InferenceError::InvalidConfig(m.into()));
        if self.n_chains == 0 {
            return bad("n_chains must be at least 1");
        }
        if self.n_iterations < 100 {
            return bad("n_iterations must be at least 100");
        }
        if self.n_warmup.is_some_and(|w| w >= self.n_iterations) {
            return bad("n_warmup must be smaller than n_iterations");
        }
        if self.grid_points < 2 {
            return bad("grid_points must be at least 2");
        }
        if !(self.padding >= 0.0 && self.padding.is_finite()) {
            return bad("padding must be a non-negative number");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad("target_accept must lie in (0, 1)");
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return bad("jitter must be a non-negative number");
        }
        if let AnchorPolicy::Equispaced { count } = self.anchors {
            if !(2..=MAX_POINTS).contains(&count) {
                return bad("anchor count must lie in 2..=500");
            }
        }
        Ok(())
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            n_chains: self.n_chains,
            n_iterations: self.n_iterations,
            n_warmup: self.n_warmup,
            target_accept: self.target_accept,
            max_tree_depth: self.max_tree_depth,
            seed: self.seed,
            ..SamplerConfig::default()
        }
    }
}

/// One posterior draw mapped to the evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraw {
    pub chain: usize,
    pub drift: Vec<f64>,
    /// `exp(ĝ)` on the grid; strictly positive.
    pub diffusion: Vec<f64>,
    /// Log-scale hyperparameters in [`HYPER_NAMES`] order.
    pub hypers: Vec<f64>,
}

/// Per-chain sampler summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub step_size: f64,
    pub mean_accept: f64,
    pub mean_tree_depth: f64,
    pub divergences: usize,
    pub warmup_divergences: usize,
}

/// Which latent curve to summarize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    Drift,
    Diffusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub grid: Vec<f64>,
    pub anchors: Vec<f64>,
    /// Centre of the linear drift kernel term.
    pub centre: f64,
    /// Observed state range `(min, max)`.
    pub data_range: (f64, f64),
    pub n_transitions: usize,
    pub draws: Vec<PosteriorDraw>,
    pub diagnostics: Vec<ParamDiagnostic>,
    pub chains: Vec<ChainSummary>,
    pub divergences: usize,
    /// No sampled coordinate has R̂ above [`RHAT_WARNING`].
    pub converged: bool,
    pub divergence_warning: bool,
    pub config: FitConfig,
}

pub const SUMMARY_QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

impl Posterior {
    pub fn curves(&self, which: Curve) -> Vec<&[f64]> {
        self.draws
            .iter()
            .map(|d| match which {
                Curve::Drift => d.drift.as_slice(),
                Curve::Diffusion => d.diffusion.as_slice(),
            })
            .collect()
    }

    pub fn mean_curve(&self, which: Curve) -> Vec<f64> {
        let curves = self.curves(which);
        let n = curves.len() as f64;
        (0..self.grid.len()).map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / n).collect()
    }

    /// Pointwise type-7 quantile across draws.
    pub fn quantile_curve(&self, which: Curve, p: f64) -> Vec<f64> {
        let curves = self.curves(which);
        (0..self.grid.len())
            .map(|i| stats::quantile(&curves.iter().map(|c| c[i]).collect::<Vec<_>>(), p))
            .collect()
    }

    pub fn max_rhat(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.rhat).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn divergence_fraction(&self) -> f64 {
        self.divergences as f64 / self.draws.len().max(1) as f64
    }

    /// Human-readable warnings about convergence and divergences.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.converged {
            w.push(format!("max R-hat {:.3} exceeds {RHAT_WARNING}", self.max_rhat()));
        }
        if self.divergence_warning {
            w.push(format!(
                "{} divergent transitions ({:.1}% of draws)",
                self.divergences,
                100.0 * self.divergence_fraction()
            ));
        }
        w
    }

    /// Writes grid-wise posterior means and quantiles of both curves.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut cols = vec![("x".to_string(), self.grid.clone())];
        for (name, which) in [("drift", Curve::Drift), ("diffusion", Curve::Diffusion)] {
            cols.push((format!("{name}_mean"), self.mean_curve(which)));
            for p in SUMMARY_QUANTILES {
                cols.push((format!("{name}_q{}", p * 100.0), self.quantile_curve(which, p)));
            }
        }
        writeln!(w, "{}", cols.iter().map(|c| c.0.as_str()).collect::<Vec<_>>().join(","))?;
        for i in 0..self.grid.len() {
            writeln!(w, "{}", cols.iter().map(|c| c.1[i].to_string()).collect::<Vec<_>>().join(","))?;
        }
        Ok(())
    }
}

fn coordinate_names(m: usize) -> Vec<String> {
    (0..m)
        .map(|i| format!("z_f[{i}]"))
        .chain((0..m).map(|i| format!("z_g[{i}]")))
        .chain(HYPER_NAMES.iter().map(|s| s.to_string()))
        .collect()
}

/// R̂ and ESS for every sampled coordinate. A single chain is split in two.
fn chain_diagnostics(chains: &[ChainOutput], names: &[String]) -> Result<Vec<ParamDiagnostic>, InferenceError> {
    names
        .par_iter()
        .enumerate()
        .map(|(k, name)| {
            let mut per_chain: Vec<Vec<f64>> =
                chains.iter().map(|c| c.draws.iter().map(|d| d[k]).collect()).collect();
            if per_chain.len() == 1 {
                let c = per_chain.pop().unwrap_or_default();
                let half = c.len() / 2;
                per_chain = vec![c[..half].to_vec(), c[half..].to_vec()];
            }
            Ok(ParamDiagnostic { name: name.clone(), rhat: rhat(&per_chain)?, ess: ess(&per_chain)? })
        })
        .collect()
}

/// Equispaced points over `[lo − pad·w, hi + pad·w]`, `w = hi − lo`.
pub fn padded_grid(range: (f64, f64), padding: f64, n: usize) -> Vec<f64> {
    let w = range.1 - range.0;
    stats::linspace(range.0 - padding * w, range.1 + padding * w, n)
}

/// Builds the target, samples it and maps every draw onto the grid.
pub fn fit(c: &TimeSeriesCollection, cfg: &FitConfig) -> Result<Posterior, InferenceError> {
    cfg.validate()?;
    let transitions = to_transitions(c);
    if transitions.len() < MIN_TRANSITIONS {
        return Err(InferenceError::TooFewTransitions { found: transitions.len(), required: MIN_TRANSITIONS });
    }
    if transitions.transitions.iter().all(|t| t.dx == 0.0) {
        return Err(InferenceError::Degenerate("every transition has zero increment".into()));
    }
    let range = c.value_range();
    if range.1 <= range.0 {
        return Err(InferenceError::Degenerate("observed values span a zero-width range".into()));
    }
    let centre = 0.5 * (range.0 + range.1);
    let anchors = match cfg.anchors {
        AnchorPolicy::Equispaced { count } => padded_grid(range, cfg.padding, count),
        AnchorPolicy::ObservationSites => {
            let mut xs: Vec<f64> = transitions.transitions.iter().map(|t| t.x).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            if xs.len() > MAX_POINTS {
                return Err(GpError::TooManyPoints(xs.len()).into());
            }
            xs
        }
    };
    let grid = padded_grid(range, cfg.padding, cfg.grid_points);
    let target = DriftDiffusionTarget::new(&transitions, anchors.clone(), centre, cfg.jitter);
    let chains = hmc_sample(&target, None, &cfg.sampler())?;

    let names = coordinate_names(anchors.len());
    let diagnostics = chain_diagnostics(&chains, &names)?;
    let draws: Vec<PosteriorDraw> = chains
        .par_iter()
        .enumerate()
        .flat_map_iter(|(ci, ch)| ch.draws.iter().map(move |q| (ci, q)))
        .map(|(chain, q)| {
            let (f, gh) = target
                .latents_at(q, &grid)
                .ok_or_else(|| InferenceError::NonFinite { component: "grid mapping".into() })?;
            let diffusion: Vec<f64> = gh.iter().map(|v| v.exp()).collect();
            if !f.iter().all(|v| v.is_finite()) || !diffusion.iter().all(|v| v.is_finite() && *v > 0.0) {
                return Err(InferenceError::NonFinite { component: "grid mapping".into() });
            }
            Ok(PosteriorDraw { chain, drift: f, diffusion, hypers: q[2 * anchors.len()..].to_vec() })
        })
        .collect::<Result<_, _>>()?;

    let divergences: usize = chains.iter().map(|c| c.divergences).sum();
    let converged = diagnostics.iter().all(|d| d.rhat <= RHAT_WARNING);
    let divergence_warning = divergences as f64 > DIVERGENCE_WARNING * draws.len() as f64;
    Ok(Posterior {
        grid,
        anchors,
        centre,
        data_range: range,
        n_transitions: transitions.len(),
        draws,
        diagnostics,
        chains: chains
            .iter()
            .map(|c| ChainSummary {
                step_size: c.step_size,
                mean_accept: c.mean_accept,
                mean_tree_depth: c.mean_tree_depth,
                divergences: c.divergences,
                warmup_divergences: c.warmup_divergences,
            })
            .collect(),
        divergences,
        converged,
        divergence_warning,
        config: *cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsdata::TimeSeries;

    fn collection(values: &[&[f64]]) -> TimeSeriesCollection {
        let series = values
            .iter()
            .enumerate()
            .map(|(i, v)| TimeSeries::new(format!("u{i}"), (0..v.len()).map(|k| k as f64).collect(), v.to_vec()).unwrap())
            .collect();
        TimeSeriesCollection::new(series).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        assert!(FitConfig { n_chains: 0, ..Default::default() }.validate().is_err());
        assert!(FitConfig { n_iterations: 99, ..Default::default() }.validate().is_err());
        assert!(FitConfig { anchors: AnchorPolicy::Equispaced { count: 1 }, ..Default::default() }.validate().is_err());
        let json = r#"{"n_chains": 2, "anchors": {"kind": "observation_sites"}}"#;
        let cfg: FitConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.n_chains, 2);
        assert_eq!(cfg.n_iterations, 2000);
        assert_eq!(cfg.anchors, AnchorPolicy::ObservationSites);
    }

    #[test]
    fn rejects_small_and_degenerate_data() {
        let cfg = FitConfig::default();
        let short = collection(&[&[0.0, 1.0, 0.5]]);
        assert!(matches!(fit(&short, &cfg), Err(InferenceError::TooFewTransitions { found: 2, .. })));
        let flat = collection(&[&[1.0; 20]]);
        assert!(matches!(fit(&flat, &cfg), Err(InferenceError::Degenerate(_))));
    }

    #[test]
    fn small_fit_produces_positive_diffusion() {
        let v: Vec<f64> = (0..40).map(|k| (k as f64 * 0.7).sin()).collect();
        let c = collection(&[&v]);
        let cfg = FitConfig { n_chains: 2, n_iterations: 200, grid_points: 20, anchors: AnchorPolicy::Equispaced { count: 8 }, ..Default::default() };
        let p = fit(&c, &cfg).unwrap();
        assert_eq!(p.draws.len(), 200);
        assert_eq!(p.grid.len(), 20);
        assert!(p.grid.windows(2).all(|w| w[1] > w[0]));
        assert!(p.draws.iter().all(|d| d.diffusion.iter().all(|&g| g > 0.0)));
        assert_eq!(p.diagnostics.len(), 2 * 8 + 6);
        let mut buf = Vec::new();
        p.write_summary_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert!(text.starts_with("x,drift_mean,drift_q2.5,"));
    }
}
