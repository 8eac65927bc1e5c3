//! Reference stochastic differential equations and synthetic datasets of
//! short time series with known ground truth.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, StreamRng};
use crate::stats;
use crate::tsdata::{TimeSeries, TimeSeriesCollection};

/// Magnitude beyond which a simulated state counts as numerical blow-up.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Integration step used for all simulations unless overridden.
pub const INTERNAL_DT: f64 = 0.01;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid cusp parameters: {0}")]
    InvalidParams(String),
    #[error("simulation diverged at step {step} (state {state})")]
    Divergence { step: usize, state: f64 },
    #[error("negative diffusion {value} at state {state} (step {step})")]
    NegativeDiffusion { step: usize, state: f64, value: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("target step {target} is not an integer multiple of the internal step {internal}")]
    IncommensurateStep { target: f64, internal: f64 },
    #[error("quantile level must lie in (0, 1), got {0}")]
    InvalidQuantile(f64),
    #[error("invalid count: {0}")]
    InvalidCount(String),
    #[error(transparent)]
    Data(#[from] crate::tsdata::DataError),
}

/// Parameters of `dx = r(α + β(x−λ) − (x−λ)^3) dt + sqrt(ε) dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub r: f64,
    pub epsilon: f64,
}

impl CuspParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64, r: f64, epsilon: f64) -> Result<Self, SimError> {
        let p = Self { alpha, beta, lambda, r, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if ![self.alpha, self.beta, self.lambda, self.r, self.epsilon].iter().all(|v| v.is_finite()) {
            return Err(SimError::InvalidParams("non-finite value".into()));
        }
        if self.r <= 0.0 {
            return Err(SimError::InvalidParams(format!("r must be positive, got {}", self.r)));
        }
        if self.epsilon <= 0.0 {
            return Err(SimError::InvalidParams(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn drift(&self, x: f64) -> f64 {
        let y = x - self.lambda;
        self.r * (self.alpha + self.beta * y - y * y * y)
    }

    /// Real roots of the drift in increasing order, from the closed-form
    /// solution of the depressed cubic `y^3 − βy − α = 0`.
    pub fn equilibria(&self) -> Vec<f64> {
        let (p, q) = (-self.beta, -self.alpha);
        let disc = -(4.0 * p * p * p + 27.0 * q * q);
        let mut ys = if disc > 0.0 {
            let m = 2.0 * (-p / 3.0).sqrt();
            let theta = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0).acos() / 3.0;
            (0..3).map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos()).collect::<Vec<_>>()
        } else {
            let s = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
            vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
        };
        ys.sort_by(f64::total_cmp);
        ys.into_iter().map(|y| y + self.lambda).collect()
    }

    /// Half-width of the interval used for stationary-density quadrature.
    pub fn quadrature_half_width(&self) -> f64 {
        [1.0, self.beta.max(0.0).sqrt(), self.alpha.abs().cbrt(), (self.epsilon / self.r).powf(0.25)]
            .into_iter()
            .fold(0.0, f64::max)
            * 5.0
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Dynamics {
    Cusp(CuspParams),
    BimodalUnistable,
    Custom { drift: ScalarFn, diffusion: ScalarFn, start: f64 },
}

/// A one-dimensional SDE `dx = f(x) dt + sqrt(g(x)) dW`.
#[derive(Clone)]
pub struct SdeModel {
    name: String,
    dynamics: Dynamics,
    label: Option<usize>,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel").field("name", &self.name).field("label", &self.label).finish()
    }
}

/// The cusp catastrophe SDE with constant squared noise intensity `ε`.
pub fn cusp_model(p: CuspParams) -> SdeModel {
    let stable = p.equilibria().into_iter().filter(|&x| p.r * (p.beta - 3.0 * (x - p.lambda).powi(2)) < 0.0).count();
    SdeModel { name: "cusp".into(), dynamics: Dynamics::Cusp(p), label: Some(stable.max(1)) }
}

/// A unistable process whose state-dependent diffusion makes its
/// stationary density bimodal.
pub fn custom_bimodal_unistable() -> SdeModel {
    SdeModel { name: "bimodal-unistable".into(), dynamics: Dynamics::BimodalUnistable, label: Some(1) }
}

fn bimodal_drift(x: f64) -> f64 {
    if x <= 0.0 {
        (-0.08 * x).exp() - 0.95
    } else {
        -0.5 * x * x + 0.05
    }
}

fn bimodal_diffusion(x: f64) -> f64 {
    let u = 2.0 * x - 0.6;
    0.844 * (-u * u).exp()
}

impl SdeModel {
    /// A model from arbitrary drift and diffusion functions. `start` seeds
    /// the burn-in used to reach stationarity.
    pub fn custom(
        name: impl Into<String>,
        drift: impl Fn(f64) -> f64 + Send + Sync + 'static,
        diffusion: impl Fn(f64) -> f64 + Send + Sync + 'static,
        start: f64,
        label: Option<usize>,
    ) -> Self {
        Self {
            name: name.into(),
            dynamics: Dynamics::Custom { drift: Arc::new(drift), diffusion: Arc::new(diffusion), start },
            label,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ground-truth number of stable states, when known.
    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn cusp_params(&self) -> Option<CuspParams> {
        match self.dynamics {
            Dynamics::Cusp(p) => Some(p),
            _ => None,
        }
    }

    pub fn drift(&self, x: f64) -> f64 {
        match &self.dynamics {
            Dynamics::Cusp(p) => p.drift(x),
            Dynamics::BimodalUnistable => bimodal_drift(x),
            Dynamics::Custom { drift, .. } => drift(x),
        }
    }

    /// Squared noise intensity `g(x)`.
    pub fn diffusion(&self, x: f64) -> f64 {
        match &self.dynamics {
            Dynamics::Cusp(p) => p.epsilon,
            Dynamics::BimodalUnistable => bimodal_diffusion(x),
            Dynamics::Custom { diffusion, .. } => diffusion(x),
        }
    }

    /// State from which burn-in starts: the diffusion's mode where one exists.
    pub fn burn_in_start(&self) -> f64 {
        match &self.dynamics {
            Dynamics::Cusp(p) => p.equilibria()[0],
            Dynamics::BimodalUnistable => 0.3,
            Dynamics::Custom { start, .. } => *start,
        }
    }

    /// Drift roots in `[lo, hi]` split into (stable, tipping), located by a
    /// sign scan on `n` cells refined with bisection.
    pub fn equilibria(&self, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        if let Some(p) = self.cusp_params() {
            let (mut stable, mut tipping) = (Vec::new(), Vec::new());
            for x in p.equilibria() {
                if p.beta - 3.0 * (x - p.lambda).powi(2) < 0.0 {
                    stable.push(x);
                } else {
                    tipping.push(x);
                }
            }
            return (stable, tipping);
        }
        let xs = stats::linspace(lo, hi, n + 1);
        let (mut stable, mut tipping) = (Vec::new(), Vec::new());
        for w in xs.windows(2) {
            let (fa, fb) = (self.drift(w[0]), self.drift(w[1]));
            if fa.signum() == fb.signum() || fa == 0.0 {
                continue;
            }
            let (mut a, mut b) = (w[0], w[1]);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if self.drift(m).signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            let root = 0.5 * (a + b);
            if fa > 0.0 {
                stable.push(root);
            } else {
                tipping.push(root);
            }
        }
        (stable, tipping)
    }
}

/// A uniformly sampled path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Euler-Maruyama integration seeded from `seed`.
pub fn euler_maruyama(m: &SdeModel, x0: f64, dt: f64, n_steps: usize, seed: u64) -> Result<Trajectory, SimError> {
    let mut rng = rng::stream(seed, &[]);
    let values = integrate(m, x0, dt, n_steps, &mut rng)?;
    let times = (0..=n_steps).map(|k| k as f64 * dt).collect();
    Ok(Trajectory { dt, times, values })
}

/// Integrates `n_steps` Euler-Maruyama steps, returning all `n_steps + 1`
/// states.
pub fn integrate(m: &SdeModel, x0: f64, dt: f64, n_steps: usize, rng: &mut StreamRng) -> Result<Vec<f64>, SimError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidStep(dt));
    }
    let sqrt_dt = dt.sqrt();
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut x = x0;
    out.push(x);
    for step in 1..=n_steps {
        x = em_step(m, x, dt, sqrt_dt, rng, step)?;
        out.push(x);
    }
    Ok(out)
}

#[inline]
pub(crate) fn em_step(m: &SdeModel, x: f64, dt: f64, sqrt_dt: f64, rng: &mut StreamRng, step: usize) -> Result<f64, SimError> {
    let g = m.diffusion(x);
    if g < 0.0 {
        return Err(SimError::NegativeDiffusion { step, state: x, value: g });
    }
    let z: f64 = rng.sample(StandardNormal);
    let next = x + m.drift(x) * dt + g.sqrt() * sqrt_dt * z;
    if !next.is_finite() || next.abs() > DIVERGENCE_BOUND {
        return Err(SimError::Divergence { step, state: next });
    }
    Ok(next)
}

/// Stationary density of a cusp model tabulated by trapezoid quadrature,
/// with its CDF for inverse-transform sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspStationary {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub cdf: Vec<f64>,
}

/// Default number of quadrature nodes for the cusp stationary density.
pub const CUSP_QUADRATURE_NODES: usize = 4001;

impl CuspStationary {
    pub fn new(p: &CuspParams) -> Self {
        let h = p.quadrature_half_width();
        Self::on_grid(p, stats::linspace(p.lambda - h, p.lambda + h, CUSP_QUADRATURE_NODES))
    }

    /// `π(x) ∝ exp(−2U(x)/ε)` with `U = −∫f` accumulated by trapezoid.
    pub fn on_grid(p: &CuspParams, grid: Vec<f64>) -> Self {
        let neg_drift: Vec<f64> = grid.iter().map(|&x| -p.drift(x)).collect();
        let potential = stats::cumulative_trapezoid(&grid, &neg_drift);
        let log_pi: Vec<f64> = potential.iter().map(|u| -2.0 * u / p.epsilon).collect();
        let top = log_pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut density: Vec<f64> = log_pi.iter().map(|l| (l - top).exp()).collect();
        let z = stats::trapezoid(&grid, &density);
        density.iter_mut().for_each(|d| *d /= z);
        let mut cdf = stats::cumulative_trapezoid(&grid, &density);
        let last = *cdf.last().unwrap();
        cdf.iter_mut().for_each(|c| *c /= last);
        Self { grid, density, cdf }
    }

    /// Inverse CDF by bisection on the tabulated CDF and linear interpolation.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64, SimError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(SimError::InvalidQuantile(u));
        }
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        Ok(self.grid[i - 1] + t * (self.grid[i] - self.grid[i - 1]))
    }

    /// Density interpolated at `x`, zero outside the tabulated range.
    pub fn density_at(&self, x: f64) -> f64 {
        if x < self.grid[0] || x > *self.grid.last().unwrap() {
            return 0.0;
        }
        stats::interp(&self.grid, &self.density, x)
    }
}

/// `F^{-1}(u)` for the cusp stationary distribution.
pub fn cusp_stationary_cdf_inverse(p: &CuspParams, u: f64) -> Result<f64, SimError> {
    p.validate()?;
    CuspStationary::new(p).inverse_cdf(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    /// Integration step; the target step must be a multiple of it.
    pub internal_dt: f64,
    /// Burn-in steps used when no analytic stationary density exists.
    pub burn_in_steps: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self { internal_dt: INTERNAL_DT, burn_in_steps: 10_000 }
    }
}

/// Ground truth accompanying a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub model: String,
    pub cusp: Option<CuspParams>,
    pub stable_points: Vec<f64>,
    pub tipping_points: Vec<f64>,
    pub label: Option<usize>,
    pub n_series: usize,
    pub points_per_series: usize,
    pub dt: f64,
    pub internal_dt: f64,
    pub seed: u64,
    /// Interval used for stationary-density quadrature (cusp only).
    pub quadrature_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub collection: TimeSeriesCollection,
    pub truth: GroundTruth,
}

/// Number of internal steps per target step.
pub fn stride_for(dt_target: f64, internal_dt: f64) -> Result<usize, SimError> {
    if !(dt_target > 0.0 && dt_target.is_finite()) {
        return Err(SimError::InvalidStep(dt_target));
    }
    let ratio = dt_target / internal_dt;
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-6 * ratio.max(1.0) {
        return Err(SimError::IncommensurateStep { target: dt_target, internal: internal_dt });
    }
    Ok(stride as usize)
}

pub fn generate_short_series(
    m: &SdeModel,
    n_series: usize,
    pts_per_series: usize,
    dt_target: f64,
    seed: u64,
) -> Result<SimulatedDataset, SimError> {
    generate_short_series_with(m, n_series, pts_per_series, dt_target, seed, &GenerateConfig::default())
}

/// Independent short series, each started from a stationary draw,
/// integrated at the internal step and subsampled to `dt_target`.
pub fn generate_short_series_with(
    m: &SdeModel,
    n_series: usize,
    pts_per_series: usize,
    dt_target: f64,
    seed: u64,
    cfg: &GenerateConfig,
) -> Result<SimulatedDataset, SimError> {
    if n_series == 0 {
        return Err(SimError::InvalidCount("n_series must be at least 1".into()));
    }
    if pts_per_series < 2 {
        return Err(SimError::InvalidCount("points per series must be at least 2".into()));
    }
    let stride = stride_for(dt_target, cfg.internal_dt)?;
    let starter = StationaryStarter::new(m, cfg);

    let series = (0..n_series)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, &[i as u64]);
            let x0 = starter.draw(&mut rng)?;
            let path = integrate(m, x0, cfg.internal_dt, stride * (pts_per_series - 1), &mut rng)?;
            let values: Vec<f64> = path.into_iter().step_by(stride).collect();
            let times = (0..pts_per_series).map(|k| k as f64 * dt_target).collect();
            Ok(TimeSeries::new(format!("s{i:05}"), times, values)?)
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let collection = TimeSeriesCollection::new(series)?;
    let (lo, hi) = collection.value_range();
    let pad = (hi - lo).max(1.0);
    let (stable_points, tipping_points) = m.equilibria(lo - pad, hi + pad, 20_000);
    let truth = GroundTruth {
        model: m.name.clone(),
        cusp: m.cusp_params(),
        stable_points,
        tipping_points,
        label: m.label,
        n_series,
        points_per_series: pts_per_series,
        dt: dt_target,
        internal_dt: cfg.internal_dt,
        seed,
        quadrature_range: m.cusp_params().map(|p| {
            let h = p.quadrature_half_width();
            (p.lambda - h, p.lambda + h)
        }),
    };
    Ok(SimulatedDataset { collection, truth })
}

/// Draws initial states from the stationary distribution: exactly for the
/// cusp model, by burn-in otherwise.
pub struct StationaryStarter<'a> {
    model: &'a SdeModel,
    cusp: Option<CuspStationary>,
    cfg: GenerateConfig,
}

impl<'a> StationaryStarter<'a> {
    pub fn new(model: &'a SdeModel, cfg: &GenerateConfig) -> Self {
        Self { model, cusp: model.cusp_params().map(|p| CuspStationary::new(&p)), cfg: *cfg }
    }

    pub fn draw(&self, rng: &mut StreamRng) -> Result<f64, SimError> {
        match &self.cusp {
            Some(st) => {
                let u: f64 = loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                };
                st.inverse_cdf(u)
            }
            None => {
                let dt = self.cfg.internal_dt;
                let sqrt_dt = dt.sqrt();
                let mut x = self.model.burn_in_start();
                for step in 1..=self.cfg.burn_in_steps {
                    x = em_step(self.model, x, dt, sqrt_dt, rng, step)?;
                }
                Ok(x)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn unit_cusp() -> CuspParams {
        CuspParams::new(0.0, 1.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn cusp_drift_values() {
        let m = cusp_model(unit_cusp());
        assert_eq!(m.drift(0.0), 0.0);
        assert_eq!(m.drift(1.0), 0.0);
        assert_eq!(m.drift(-1.0), 0.0);
        assert!((m.drift(0.5) - 0.375).abs() < 1e-15);
        assert_eq!(m.diffusion(3.0), 1.0);
        assert_eq!(m.label(), Some(2));

        let mono = cusp_model(CuspParams::new(0.0, -1.0, 0.0, 1.0, 1.0).unwrap());
        assert_eq!(mono.cusp_params().unwrap().equilibria().len(), 1);
        assert_eq!(mono.label(), Some(1));
    }

    #[test]
    fn invalid_cusp_params() {
        assert!(CuspParams::new(0.0, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(CuspParams::new(0.0, 1.0, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn cubic_roots_match_sign_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = CuspParams::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-2.0..3.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.2..3.0),
                1.0,
            )
            .unwrap();
            let roots = p.equilibria();
            let h = p.quadrature_half_width();
            let xs = stats::linspace(p.lambda - h, p.lambda + h, 200_001);
            let scan: Vec<f64> = xs
                .windows(2)
                .filter(|w| p.drift(w[0]).signum() != p.drift(w[1]).signum())
                .map(|w| 0.5 * (w[0] + w[1]))
                .collect();
            assert_eq!(roots.len(), scan.len(), "{p:?}");
            for (a, b) in roots.iter().zip(&scan) {
                assert!((a - b).abs() < 1e-4, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn bimodal_model_shape() {
        let m = custom_bimodal_unistable();
        assert!((bimodal_drift(0.0) - 0.05).abs() < 1e-15);
        assert!((bimodal_drift(1e-12) - 0.05).abs() < 1e-12);
        assert!((m.diffusion(0.3) - 0.844).abs() < 1e-15);
        assert!(m.diffusion(0.29) < 0.844 && m.diffusion(0.31) < 0.844);
        for x in stats::linspace(-10.0, 10.0, 2001) {
            assert!(m.diffusion(x) > 0.0 || x.abs() > 5.0);
            if x <= 0.0 {
                assert!(m.drift(x) > 0.0);
            }
        }
        assert!(m.diffusion(-3.0) > 0.0);
        let (stable, tipping) = m.equilibria(-10.0, 10.0, 20_000);
        assert!(tipping.is_empty());
        assert_eq!(stable.len(), 1);
        assert!((stable[0] - 0.1f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn deterministic_euler() {
        let m = SdeModel::custom("const", |_| 2.0, |_| 0.0, 0.0, None);
        let tr = euler_maruyama(&m, 1.0, 0.5, 10, 3).unwrap();
        for (n, x) in tr.values.iter().enumerate() {
            assert!((x - (1.0 + n as f64 * 2.0 * 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn wiener_increments() {
        let m = SdeModel::custom("wiener", |_| 0.0, |_| 1.0, 0.0, None);
        let dt = 0.01;
        let tr = euler_maruyama(&m, 0.0, dt, 100_000, 5).unwrap();
        let inc: Vec<f64> = tr.values.windows(2).map(|w| w[1] - w[0]).collect();
        let v = stats::variance(&inc);
        assert!((v / dt - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn seeded_paths_identical() {
        let m = cusp_model(unit_cusp());
        let a = euler_maruyama(&m, 0.1, 0.01, 1000, 9).unwrap();
        let b = euler_maruyama(&m, 0.1, 0.01, 1000, 9).unwrap();
        assert_eq!(a, b);
        let c = euler_maruyama(&m, 0.1, 0.01, 1000, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn divergence_reported_with_step() {
        let m = SdeModel::custom("explode", |x| x * x, |_| 0.0, 0.0, None);
        match euler_maruyama(&m, 10.0, 0.1, 100, 0) {
            Err(SimError::Divergence { step, .. }) => assert!(step > 0 && step < 100),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(euler_maruyama(&m, 0.0, 0.0, 1, 0), Err(SimError::InvalidStep(_))));
    }

    #[test]
    fn inverse_cdf_properties() {
        let st = CuspStationary::new(&unit_cusp());
        assert!(st.inverse_cdf(0.5).unwrap().abs() < 1e-9);
        let mut last = f64::NEG_INFINITY;
        for u in stats::linspace(0.001, 0.999, 500) {
            let x = st.inverse_cdf(u).unwrap();
            assert!(x >= last);
            last = x;
        }
        assert!(st.inverse_cdf(0.0).is_err());
        assert!(st.inverse_cdf(1.0).is_err());
        assert!(cusp_stationary_cdf_inverse(&unit_cusp(), 1.5).is_err());
        assert!((stats::trapezoid(&st.grid, &st.density) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stride_rules() {
        assert_eq!(stride_for(0.01, 0.01).unwrap(), 1);
        assert_eq!(stride_for(0.3, 0.01).unwrap(), 30);
        assert!(stride_for(0.015, 0.01).is_err());
        assert!(stride_for(0.001, 0.01).is_err());
    }

    #[test]
    fn short_series_generation() {
        let m = cusp_model(unit_cusp());
        let d = generate_short_series(&m, 50, 2, 0.1, 4).unwrap();
        assert_eq!(d.collection.n_transitions(), 50);
        assert_eq!(d.truth.label, Some(2));
        assert_eq!(d.truth.stable_points.len(), 2);
        assert_eq!(d.truth.tipping_points.len(), 1);
        let again = generate_short_series(&m, 50, 2, 0.1, 4).unwrap();
        assert_eq!(d.collection, again.collection);

        // dt_target equal to the internal step keeps every internal state.
        let one = generate_short_series(&m, 1, 4, 0.01, 2).unwrap();
        let st = CuspStationary::new(&unit_cusp());
        let mut rng = rng::stream(2, &[0]);
        let x0 = StationaryStarter::new(&m, &GenerateConfig::default()).draw(&mut rng).unwrap();
        let path = integrate(&m, x0, 0.01, 3, &mut rng).unwrap();
        assert_eq!(one.collection.series()[0].values(), path.as_slice());
        assert!(st.density_at(x0) > 0.0);

        assert!(generate_short_series(&m, 0, 2, 0.1, 0).is_err());
        assert!(generate_short_series(&m, 1, 1, 0.1, 0).is_err());
    }

    #[test]
    fn burn_in_start_for_custom_models() {
        let m = custom_bimodal_unistable();
        let d = generate_short_series(&m, 20, 3, 0.05, 8).unwrap();
        assert_eq!(d.truth.label, Some(1));
        assert!(d.truth.quadrature_range.is_none());
        assert!((d.truth.stable_points[0] - 0.1f64.sqrt()).abs() < 1e-6);
    }
}
