//! Stationary density and the two potential landscapes.

use serde::{Deserialize, Serialize};

use super::{CurvePair, DerivedError};
use crate::stats::{cumulative_trapezoid, trapezoid};

/// Floor applied to densities before taking logarithms.
pub const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDensity {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Trapezoid integral of `density`; 1 up to rounding.
    pub normalization: f64,
}

/// `π(x) ∝ exp(2∫ f/g) / g`, normalized by the trapezoid rule.
pub fn stationary_density(cp: &CurvePair) -> Result<StationaryDensity, DerivedError> {
    let ratio: Vec<f64> = cp.drift().iter().zip(cp.diffusion()).map(|(f, g)| 2.0 * f / g).collect();
    let integral = cumulative_trapezoid(cp.grid(), &ratio);
    let log_pi: Vec<f64> = integral.iter().zip(cp.diffusion()).map(|(s, g)| s - g.ln()).collect();
    let max = log_pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(DerivedError::Overflow);
    }
    let unnorm: Vec<f64> = log_pi.iter().map(|v| (v - max).exp()).collect();
    let z = trapezoid(cp.grid(), &unnorm);
    if !(z.is_finite() && z > 0.0) {
        return Err(DerivedError::Overflow);
    }
    let density: Vec<f64> = unnorm.iter().map(|v| v / z).collect();
    let normalization = trapezoid(cp.grid(), &density);
    Ok(StationaryDensity { grid: cp.grid().to_vec(), density, normalization })
}

/// `−ln π`, with π floored at [`DENSITY_FLOOR`].
pub fn effective_potential(sd: &StationaryDensity) -> Vec<f64> {
    sd.density.iter().map(|p| -p.max(DENSITY_FLOOR).ln()).collect()
}

/// `U(x) = −∫ f`, zero at the first grid point.
pub fn potential(cp: &CurvePair) -> Vec<f64> {
    cumulative_trapezoid(cp.grid(), cp.drift()).into_iter().map(|v| -v).collect()
}
