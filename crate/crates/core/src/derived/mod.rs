//! Quantities derived from drift/diffusion curves: stationary densities,
//! potentials, stability structure and mean exit times.

mod exit;
mod landscape;
mod stability;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exit::{
    exit_operator, exit_time, exit_time_band, exit_time_band_from_curves, solve_tridiagonal, MIN_RETAINED_DRAWS,
    BandMode, Basin, ExitTimeBand, ExitTimeSolution};
pub use landscape::{effective_potential, potential, stationary_density, StationaryDensity, DENSITY_FLOOR};
pub use stability::{
    classify_roots, multistability_from_curves, multistability_posterior, tipping_region,
    tipping_region_from_curves, MultistabilityPosterior, StabilityStructure, TippingRegion,
    MIN_BISTABLE_DRAWS,
};

#[derive(Debug, Error)]
pub enum DerivedError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("stationary density overflowed after max-subtraction")]
    Overflow,
    #[error("posterior has no draws")]
    NoDraws,
    #[error("all {0} draws have an invalid stability structure")]
    AllDrawsInvalid(usize),
    #[error("{found} valid bistable draws, at least {required} required")]
    InsufficientBistable { found: usize, required: usize },
    #[error("tipping point {0} is not strictly inside the grid")]
    TippingOutsideGrid(f64),
    #[error("singular tridiagonal system on the {side} side")]
    Singular { side: Basin },
    #[error("posterior-mean drift is not bistable ({stable} stable, {tipping} tipping points)")]
    NotBistable { stable: usize, tipping: usize },
    #[error("{found} draws share the posterior-mean tipping point, at least {required} required")]
    TooFewRetained { found: usize, required: usize },
}

/// Drift `f` and diffusion `g` tabulated on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePair {
    grid: Vec<f64>,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
}

impl CurvePair {
    pub fn new(grid: Vec<f64>, drift: Vec<f64>, diffusion: Vec<f64>) -> Result<Self, DerivedError> {
        if grid.len() < 2 {
            return Err(DerivedError::InvalidCurve("grid needs at least 2 points".into()));
        }
        if drift.len() != grid.len() || diffusion.len() != grid.len() {
            return Err(DerivedError::InvalidCurve(format!(
                "lengths differ: grid {}, drift {}, diffusion {}",
                grid.len(),
                drift.len(),
                diffusion.len()
            )));
        }
        if !grid.windows(2).all(|w| w[1] > w[0]) || !grid.iter().all(|v| v.is_finite()) {
            return Err(DerivedError::InvalidCurve("grid must be finite and strictly increasing".into()));
        }
        if !drift.iter().all(|v| v.is_finite()) {
            return Err(DerivedError::InvalidCurve("drift has non-finite values".into()));
        }
        if !diffusion.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(DerivedError::InvalidCurve("diffusion must be finite and strictly positive".into()));
        }
        Ok(Self { grid, drift, diffusion })
    }

    /// Tabulates closures on the grid.
    pub fn from_fns(grid: Vec<f64>, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> Result<Self, DerivedError> {
        let drift = grid.iter().map(|&x| f(x)).collect();
        let diffusion = grid.iter().map(|&x| g(x)).collect();
        Self::new(grid, drift, diffusion)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    /// Returns a copy with both curves multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self, DerivedError> {
        Self::new(
            self.grid.clone(),
            self.drift.iter().map(|v| v * k).collect(),
            self.diffusion.iter().map(|v| v * k).collect(),
        )
    }
}
