//! Equilibria of drift curves and their posterior summaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DerivedError;
use crate::inference::{Curve, Posterior};
use crate::stats::{mean, quantile};

/// Valid single-tipping-point draws needed by [`tipping_region`].
pub const MIN_BISTABLE_DRAWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityStructure {
    /// Downward zero crossings of the drift, sorted.
    pub stable_points: Vec<f64>,
    /// Upward zero crossings of the drift, sorted.
    pub tipping_points: Vec<f64>,
    /// `#stable = #tipping + 1`.
    pub valid: bool,
}

impl StabilityStructure {
    pub fn n_stable(&self) -> usize {
        self.stable_points.len()
    }
}

/// Locates strict sign changes of `drift` between adjacent grid points by
/// linear interpolation. A value touching zero without changing sign is not
/// a root; exact zeros are skipped when pairing neighbours.
pub fn classify_roots(grid: &[f64], drift: &[f64]) -> StabilityStructure {
    let mut stable_points = Vec::new();
    let mut tipping_points = Vec::new();
    let mut prev: Option<usize> = None;
    for i in 0..drift.len().min(grid.len()) {
        if drift[i] == 0.0 {
            continue;
        }
        if let Some(j) = prev {
            let (fa, fb) = (drift[j], drift[i]);
            if fa.signum() != fb.signum() {
                let root = if i == j + 1 {
                    grid[j] + fa / (fa - fb) * (grid[i] - grid[j])
                } else {
                    // Run of exact zeros between j and i: take its midpoint.
                    0.5 * (grid[j + 1] + grid[i - 1])
                };
                if fa > 0.0 {
                    stable_points.push(root);
                } else {
                    tipping_points.push(root);
                }
            }
        }
        prev = Some(i);
    }
    let valid = stable_points.len() == tipping_points.len() + 1;
    StabilityStructure { stable_points, tipping_points, valid }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistabilityPosterior {
    /// `probabilities[k]` is the posterior probability of `k` stable states.
    pub probabilities: Vec<f64>,
    pub n_draws: usize,
    pub n_valid: usize,
    pub discarded_fraction: f64,
}

impl MultistabilityPosterior {
    /// Most probable number of stable states; ties go to the smaller count.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = k;
            }
        }
        best
    }

    pub fn probability(&self, k: usize) -> f64 {
        self.probabilities.get(k).copied().unwrap_or(0.0)
    }
}

pub fn multistability_from_curves(grid: &[f64], drifts: &[&[f64]]) -> Result<MultistabilityPosterior, DerivedError> {
    if drifts.is_empty() {
        return Err(DerivedError::NoDraws);
    }
    let structures: Vec<StabilityStructure> = drifts.par_iter().map(|f| classify_roots(grid, f)).collect();
    let valid: Vec<usize> = structures.iter().filter(|s| s.valid).map(StabilityStructure::n_stable).collect();
    if valid.is_empty() {
        return Err(DerivedError::AllDrawsInvalid(drifts.len()));
    }
    let max = valid.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for k in &valid {
        counts[*k] += 1;
    }
    let n_valid = valid.len();
    Ok(MultistabilityPosterior {
        probabilities: counts.iter().map(|&c| c as f64 / n_valid as f64).collect(),
        n_draws: drifts.len(),
        n_valid,
        discarded_fraction: (drifts.len() - n_valid) as f64 / drifts.len() as f64,
    })
}

/// Histogram of stable-state counts over draws with a valid structure.
pub fn multistability_posterior(p: &Posterior) -> Result<MultistabilityPosterior, DerivedError> {
    multistability_from_curves(&p.grid, &p.curves(Curve::Drift))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TippingRegion {
    pub mean: f64,
    pub interval_50: (f64, f64),
    pub interval_95: (f64, f64),
    pub n_draws: usize,
}

pub fn tipping_region_from_curves(grid: &[f64], drifts: &[&[f64]]) -> Result<TippingRegion, DerivedError> {
    let tips: Vec<f64> = drifts
        .par_iter()
        .filter_map(|f| {
            let s = classify_roots(grid, f);
            (s.valid && s.tipping_points.len() == 1).then(|| s.tipping_points[0])
        })
        .collect();
    if tips.len() < MIN_BISTABLE_DRAWS {
        return Err(DerivedError::InsufficientBistable { found: tips.len(), required: MIN_BISTABLE_DRAWS });
    }
    Ok(TippingRegion {
        mean: mean(&tips),
        interval_50: (quantile(&tips, 0.25), quantile(&tips, 0.75)),
        interval_95: (quantile(&tips, 0.025), quantile(&tips, 0.975)),
        n_draws: tips.len(),
    })
}

/// Location summary of the tipping point over valid bistable draws.
pub fn tipping_region(p: &Posterior) -> Result<TippingRegion, DerivedError> {
    tipping_region_from_curves(&p.grid, &p.curves(Curve::Drift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::linspace;
    use proptest::prelude::*;

    fn tab(grid: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        grid.iter().map(|&x| f(x)).collect()
    }

    #[test]
    fn cubic_and_linear_drifts() {
        let grid = linspace(-2.0, 2.0, 201);
        let s = classify_roots(&grid, &tab(&grid, |x| x - x.powi(3)));
        assert_eq!(s.stable_points.len(), 2);
        assert_eq!(s.tipping_points.len(), 1);
        assert!((s.stable_points[0] + 1.0).abs() < 1e-9 && (s.stable_points[1] - 1.0).abs() < 1e-9);
        assert!(s.tipping_points[0].abs() < 1e-9);
        assert!(s.valid);

        let grid = linspace(-1.05, 1.0, 40);
        let s = classify_roots(&grid, &tab(&grid, |x| -x));
        assert_eq!(s.tipping_points.len(), 0);
        assert!(s.stable_points[0].abs() < 1e-12);
        assert!(s.valid);
    }

    #[test]
    fn sine_roots_alternate_and_count_rule() {
        let grid = linspace(0.1, 4.0 * std::f64::consts::PI - 0.1, 500);
        let s = classify_roots(&grid, &tab(&grid, |x| 2.0 * x.sin()));
        // Downward crossings at π and 3π, upward at 2π.
        assert_eq!(s.stable_points.len(), 2);
        assert_eq!(s.tipping_points.len(), 1);
        assert!(s.valid);
        let grid = linspace(0.1, 3.0 * std::f64::consts::PI - 0.1, 500);
        let s = classify_roots(&grid, &tab(&grid, |x| x.sin()));
        assert_eq!((s.stable_points.len(), s.tipping_points.len()), (1, 1));
        assert!(!s.valid);
    }

    #[test]
    fn touching_zero_is_not_a_root() {
        let grid = linspace(-1.0, 1.0, 21);
        let s = classify_roots(&grid, &tab(&grid, |x| x * x));
        assert!(s.stable_points.is_empty() && s.tipping_points.is_empty());
        let s = classify_roots(&[0.0, 1.0, 2.0, 3.0], &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(s.stable_points, vec![1.5]);
    }

    #[test]
    fn multistability_counting() {
        let grid = linspace(-2.0, 2.0, 101);
        let uni = tab(&grid, |x| -x);
        let bi = tab(&grid, |x| x - x.powi(3));
        let bad = tab(&grid, |x| x);
        let mut drifts: Vec<&[f64]> = vec![&uni; 6];
        drifts.extend(vec![bi.as_slice(); 4]);
        drifts.extend(vec![bad.as_slice(); 5]);
        let m = multistability_from_curves(&grid, &drifts).unwrap();
        assert_eq!(m.probabilities, vec![0.0, 0.6, 0.4]);
        assert_eq!(m.n_valid, 10);
        assert!((m.discarded_fraction - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.mode(), 1);

        let m = multistability_from_curves(&grid, &[&uni, &uni]).unwrap();
        assert_eq!(m.probability(1), 1.0);
        assert!(matches!(multistability_from_curves(&grid, &[&bad]), Err(DerivedError::AllDrawsInvalid(1))));
        assert!(matches!(multistability_from_curves(&grid, &[]), Err(DerivedError::NoDraws)));
    }

    #[test]
    fn tipping_region_quantiles() {
        let grid = linspace(-2.0, 2.0, 101);
        let at_zero = tab(&grid, |x| x - x.powi(3));
        let region = tipping_region_from_curves(&grid, &vec![at_zero.as_slice(); 25]).unwrap();
        assert!(region.mean.abs() < 1e-12);
        assert!(region.interval_95.0.abs() < 1e-12 && region.interval_95.1.abs() < 1e-12);

        // Tipping points 0.001·k − 0.1, k = 0..=200, cover [−0.1, 0.1]
        // uniformly; the type-7 2.5% and 97.5% quantiles are ∓0.095.
        let fine = linspace(-2.0, 2.0, 4001);
        let curves: Vec<Vec<f64>> =
            (0..=200).map(|k| 0.001 * k as f64 - 0.1).map(|t| tab(&fine, |x| (x - t) - (x - t).powi(3))).collect();
        let refs: Vec<&[f64]> = curves.iter().map(Vec::as_slice).collect();
        let region = tipping_region_from_curves(&fine, &refs).unwrap();
        assert!((region.interval_95.0 + 0.095).abs() < 1e-6);
        assert!((region.interval_95.1 - 0.095).abs() < 1e-6);
        assert!((region.interval_50.0 + 0.05).abs() < 1e-6);

        let few = vec![at_zero.as_slice(); 19];
        assert!(matches!(
            tipping_region_from_curves(&grid, &few),
            Err(DerivedError::InsufficientBistable { found: 19, required: 20 })
        ));
    }

    proptest! {
        #[test]
        fn roots_match_extrema_of_potential(coefs in prop::collection::vec(-1.0f64..1.0, 4), freqs in prop::collection::vec(0.5f64..3.0, 4)) {
            // U is a smooth random curve; f = −U'.
            let grid = linspace(-3.0, 3.0, 301);
            let u = |x: f64| coefs.iter().zip(&freqs).map(|(a, w)| a * (w * x).sin()).sum::<f64>() + 0.05 * x * x;
            let du = |x: f64| coefs.iter().zip(&freqs).map(|(a, w)| a * w * (w * x).cos()).sum::<f64>() + 0.1 * x;
            let s = classify_roots(&grid, &tab(&grid, |x| -du(x)));
            let h = grid[1] - grid[0];
            // Well-separated roots only: no two within 3 cells, none within 3 cells of an edge.
            let mut roots: Vec<f64> = s.stable_points.iter().chain(&s.tipping_points).copied().collect();
            roots.sort_by(f64::total_cmp);
            prop_assume!(roots.iter().all(|r| r - grid[0] > 3.0 * h && grid[grid.len() - 1] - r > 3.0 * h));
            prop_assume!(roots.windows(2).all(|w| w[1] - w[0] > 3.0 * h));
            let uv = tab(&grid, u);
            let mut minima = Vec::new();
            let mut maxima = Vec::new();
            for i in 1..grid.len() - 1 {
                if uv[i] < uv[i - 1] && uv[i] <= uv[i + 1] { minima.push(grid[i]); }
                if uv[i] > uv[i - 1] && uv[i] >= uv[i + 1] { maxima.push(grid[i]); }
            }
            prop_assert_eq!(s.stable_points.len(), minima.len());
            prop_assert_eq!(s.tipping_points.len(), maxima.len());
            for (a, b) in s.stable_points.iter().zip(&minima) {
                prop_assert!((a - b).abs() <= h);
            }
            for (a, b) in s.tipping_points.iter().zip(&maxima) {
                prop_assert!((a - b).abs() <= h);
            }
        }
    }
}
