//! Mean exit time to the tipping point, `f T' + (g/2) T'' = −1`, and its
//! posterior band.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_roots, CurvePair, DerivedError};
use crate::inference::{Curve, Posterior};
use crate::stats::nearest_rank;

/// Draws sharing the posterior-mean tipping point needed for a band.
pub const MIN_RETAINED_DRAWS: usize = 10;

/// Description of the boundary conditions, carried in every solution.
pub const BOUNDARY_CONDITIONS: &str =
    "two-sided split: T = 0 at the grid node nearest the tipping point, zero slope at each grid end";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basin {
    Left,
    Tipping,
    Right,
}

impl fmt::Display for Basin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basin::Left => "left",
            Basin::Tipping => "tipping",
            Basin::Right => "right",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeSolution {
    pub grid: Vec<f64>,
    /// Mean exit time, in the time units of the data.
    pub values: Vec<f64>,
    /// Grid node carrying the `T = 0` condition.
    pub tipping_index: usize,
    pub tipping: f64,
    pub sides: Vec<Basin>,
    pub boundary_conditions: String,
}

/// Thomas algorithm for `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`.
/// `sub[0]` and `sup[n−1]` are ignored. Returns `None` on a zero or
/// non-finite pivot.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - sub[i] * c[i - 1];
        }
        if !pivot.is_finite() || pivot.abs() < f64::MIN_POSITIVE {
            return None;
        }
        c[i] = if i + 1 < n { sup[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - if i > 0 { sub[i] * d[i - 1] } else { 0.0 }) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Finite-difference coefficients of `f T' + (g/2) T''` at an interior node
/// with spacings `hm` (left) and `hp` (right), second order on any grid.
fn stencil(f: f64, g: f64, hm: f64, hp: f64) -> (f64, f64, f64) {
    let den = hm * hp * (hm + hp);
    let a = (-f * hp * hp + g * hp) / den;
    let b = (f * (hp * hp - hm * hm) - g * (hm + hp)) / den;
    let c = (f * hm * hm + g * hm) / den;
    (a, b, c)
}

/// Discrete `f T' + (g/2) T''` at interior node `i`.
pub fn exit_operator(cp: &CurvePair, t: &[f64], i: usize) -> f64 {
    let x = cp.grid();
    let (a, b, c) = stencil(cp.drift()[i], cp.diffusion()[i], x[i] - x[i - 1], x[i + 1] - x[i]);
    a * t[i - 1] + b * t[i] + c * t[i + 1]
}

/// Solves on the nodes `lo..=hi` with `T = 0` at `zero` (one end) and zero
/// slope at the other end.
fn solve_side(cp: &CurvePair, lo: usize, hi: usize, zero_at_hi: bool) -> Option<Vec<f64>> {
    let x = cp.grid();
    // Unknowns exclude the Dirichlet node.
    let (first, last) = if zero_at_hi { (lo, hi - 1) } else { (lo + 1, hi) };
    let n = last + 1 - first;
    let (mut sub, mut diag, mut sup, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![-1.0; n]);
    for (row, i) in (first..=last).enumerate() {
        let outer = if zero_at_hi { i == lo } else { i == hi };
        if outer {
            // One-sided zero slope: T[i] − T[neighbour] = 0.
            diag[row] = 1.0;
            if zero_at_hi {
                sup[row] = -1.0;
            } else {
                sub[row] = -1.0;
            }
            rhs[row] = 0.0;
        } else {
            let (a, b, c) = stencil(cp.drift()[i], cp.diffusion()[i], x[i] - x[i - 1], x[i + 1] - x[i]);
            sub[row] = a;
            diag[row] = b;
            sup[row] = c;
        }
    }
    let mut t = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    if zero_at_hi {
        t.push(0.0);
    } else {
        t.insert(0, 0.0);
    }
    Some(t)
}

/// Mean exit time to `tipping` from every grid node, solved separately on
/// each side of the node nearest `tipping`.
pub fn exit_time(cp: &CurvePair, tipping: f64) -> Result<ExitTimeSolution, DerivedError> {
    let x = cp.grid();
    let n = x.len();
    if !(tipping > x[0] && tipping < x[n - 1]) {
        return Err(DerivedError::TippingOutsideGrid(tipping));
    }
    let k = nearest_index(x, tipping);
    if k == 0 || k == n - 1 {
        return Err(DerivedError::TippingOutsideGrid(tipping));
    }
    let left = solve_side(cp, 0, k, true).ok_or(DerivedError::Singular { side: Basin::Left })?;
    let right = solve_side(cp, k, n - 1, false).ok_or(DerivedError::Singular { side: Basin::Right })?;
    let mut values = left;
    values.extend_from_slice(&right[1..]);
    let sides = (0..n)
        .map(|i| match i.cmp(&k) {
            std::cmp::Ordering::Less => Basin::Left,
            std::cmp::Ordering::Equal => Basin::Tipping,
            std::cmp::Ordering::Greater => Basin::Right,
        })
        .collect();
    Ok(ExitTimeSolution {
        grid: x.to_vec(),
        values,
        tipping_index: k,
        tipping: x[k],
        sides,
        boundary_conditions: BOUNDARY_CONDITIONS.into(),
    })
}

fn nearest_index(grid: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, g) in grid.iter().enumerate() {
        if (g - x).abs() < (grid[best] - x).abs() {
            best = i;
        }
    }
    best
}

/// Construction of the lower credible curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMode {
    /// Nearest-rank 40th/60th percentile at every grid node.
    #[default]
    Pointwise,
    /// Whole curves ranked on each side by their value at the posterior-mean
    /// stable point of that basin.
    CurveWise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeBand {
    pub grid: Vec<f64>,
    /// Tipping point of the posterior-mean drift.
    pub tipping: f64,
    /// Stable points of the posterior-mean drift, left then right.
    pub stable_points: (f64, f64),
    pub mean: Vec<f64>,
    pub lower_60: Vec<f64>,
    pub lower_40: Vec<f64>,
    pub n_retained: usize,
    pub n_draws: usize,
    pub mode: BandMode,
    pub boundary_conditions: String,
}

fn pointwise_mean(grid_len: usize, curves: &[&[f64]]) -> Vec<f64> {
    let n = curves.len().max(1) as f64;
    (0..grid_len).map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / n).collect()
}

/// Band from tabulated drift/diffusion draws on a shared grid.
pub fn exit_time_band_from_curves(
    grid: &[f64],
    drifts: &[&[f64]],
    diffusions: &[&[f64]],
    mode: BandMode,
) -> Result<ExitTimeBand, DerivedError> {
    if drifts.is_empty() || drifts.len() != diffusions.len() {
        return Err(DerivedError::NoDraws);
    }
    let mean_pair = CurvePair::new(
        grid.to_vec(),
        pointwise_mean(grid.len(), drifts),
        pointwise_mean(grid.len(), diffusions),
    )?;
    let s = classify_roots(grid, mean_pair.drift());
    if !(s.valid && s.tipping_points.len() == 1) {
        return Err(DerivedError::NotBistable { stable: s.stable_points.len(), tipping: s.tipping_points.len() });
    }
    let tip = s.tipping_points[0];
    let cell = grid.partition_point(|&g| g <= tip).clamp(1, grid.len() - 1);
    let width = grid[cell] - grid[cell - 1];

    let retained: Vec<usize> = (0..drifts.len())
        .into_par_iter()
        .filter(|&d| {
            let s = classify_roots(grid, drifts[d]);
            s.valid && s.tipping_points.len() == 1 && (s.tipping_points[0] - tip).abs() <= width
        })
        .collect();
    if retained.len() < MIN_RETAINED_DRAWS {
        return Err(DerivedError::TooFewRetained { found: retained.len(), required: MIN_RETAINED_DRAWS });
    }
    let solutions: Vec<Vec<f64>> = retained
        .par_iter()
        .map(|&d| {
            let cp = CurvePair::new(grid.to_vec(), drifts[d].to_vec(), diffusions[d].to_vec())?;
            Ok(exit_time(&cp, tip)?.values)
        })
        .collect::<Result<_, DerivedError>>()?;

    let curves: Vec<&[f64]> = solutions.iter().map(Vec::as_slice).collect();
    let mean = pointwise_mean(grid.len(), &curves);
    let k = nearest_index(grid, tip);
    let stable_points = (s.stable_points[0], s.stable_points[1]);
    let (lower_60, lower_40) = match mode {
        BandMode::Pointwise => {
            let at = |p: f64| -> Vec<f64> {
                (0..grid.len()).map(|i| nearest_rank(&curves.iter().map(|c| c[i]).collect::<Vec<_>>(), p)).collect()
            };
            (at(0.6), at(0.4))
        }
        BandMode::CurveWise => {
            let pick = |node: usize, p: f64| -> usize {
                let mut order: Vec<usize> = (0..curves.len()).collect();
                order.sort_by(|&a, &b| curves[a][node].total_cmp(&curves[b][node]).then(a.cmp(&b)));
                let rank = ((p * order.len() as f64 - 1e-9).ceil() as usize).clamp(1, order.len());
                order[rank - 1]
            };
            let (left_node, right_node) = (nearest_index(grid, stable_points.0), nearest_index(grid, stable_points.1));
            let build = |p: f64| -> Vec<f64> {
                let (l, r) = (pick(left_node, p), pick(right_node, p));
                (0..grid.len()).map(|i| if i <= k { curves[l][i] } else { curves[r][i] }).collect()
            };
            (build(0.6), build(0.4))
        }
    };
    Ok(ExitTimeBand {
        grid: grid.to_vec(),
        tipping: tip,
        stable_points,
        mean,
        lower_60,
        lower_40,
        n_retained: retained.len(),
        n_draws: drifts.len(),
        mode,
        boundary_conditions: BOUNDARY_CONDITIONS.into(),
    })
}

/// Exit-time band over the draws whose single tipping point lies within one
/// grid cell of the posterior-mean tipping point.
pub fn exit_time_band(p: &Posterior, mode: BandMode) -> Result<ExitTimeBand, DerivedError> {
    exit_time_band_from_curves(&p.grid, &p.curves(Curve::Drift), &p.curves(Curve::Diffusion), mode)
}
