//! Covariance kernels, jittered covariance matrices and noiseless
//! Gaussian-process conditioning (zero prior mean).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on the number of points a covariance matrix may span.
pub const MAX_POINTS: usize = 500;

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("Cholesky factorization failed even with jitter {jitter:e}")]
    Factorization { jitter: f64 },
    #[error("{0} points exceed the limit of {MAX_POINTS}")]
    TooManyPoints(usize),
    #[error("at least one point is required")]
    NoPoints,
    #[error("training inputs and values differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Hyperparameters of `σq² exp(−(x−x')²/2l²) + σb² + σl²(x−c)(x'−c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftKernelParams {
    pub sigma_q: f64,
    pub l: f64,
    pub sigma_b: f64,
    pub sigma_l: f64,
    pub c: f64,
}

/// Hyperparameters of the exponentiated quadratic kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionKernelParams {
    pub sigma_q: f64,
    pub l: f64,
}

pub fn eq_kernel(x: f64, x2: f64, p: &DiffusionKernelParams) -> f64 {
    let r = x - x2;
    p.sigma_q * p.sigma_q * (-r * r / (2.0 * p.l * p.l)).exp()
}

pub fn drift_kernel(x: f64, x2: f64, p: &DriftKernelParams) -> f64 {
    let eq = eq_kernel(x, x2, &DiffusionKernelParams { sigma_q: p.sigma_q, l: p.l });
    eq + p.sigma_b * p.sigma_b + p.sigma_l * p.sigma_l * (x - p.c) * (x2 - p.c)
}

/// A covariance function over scalar states.
pub trait Kernel {
    fn eval(&self, x: f64, x2: f64) -> f64;
}

impl Kernel for DriftKernelParams {
    fn eval(&self, x: f64, x2: f64) -> f64 {
        drift_kernel(x, x2, self)
    }
}

impl Kernel for DiffusionKernelParams {
    fn eval(&self, x: f64, x2: f64) -> f64 {
        eq_kernel(x, x2, self)
    }
}

/// Kernel matrix with the diagonal jitter that made it factorizable.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    pub matrix: DMatrix<f64>,
    pub jitter: f64,
    pub cholesky: Cholesky<f64, Dyn>,
}

/// Pairwise kernel matrix between two point sets.
pub fn cross_cov(a: &[f64], b: &[f64], k: &impl Kernel) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| k.eval(a[i], b[j]))
}

/// Builds `K + jitter·I`, raising the jitter tenfold from
/// `1e-8 · mean(diag K)` up to `1e-4 · mean(diag K)` until Cholesky succeeds.
pub fn cov_matrix(points: &[f64], k: &impl Kernel) -> Result<CovMatrix, GpError> {
    if points.is_empty() {
        return Err(GpError::NoPoints);
    }
    if points.len() > MAX_POINTS {
        return Err(GpError::TooManyPoints(points.len()));
    }
    let base = cross_cov(points, points, k);
    let scale = (base.diagonal().sum() / points.len() as f64).abs().max(f64::MIN_POSITIVE);
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * scale;
        let mut m = base.clone();
        for i in 0..points.len() {
            m[(i, i)] += jitter;
        }
        if let Some(cholesky) = Cholesky::new(m.clone()) {
            return Ok(CovMatrix { matrix: m, jitter, cholesky });
        }
        if rel >= JITTER_MAX {
            return Err(GpError::Factorization { jitter });
        }
        rel *= 10.0;
    }
}

/// Posterior mean and covariance of a zero-mean GP at `test_x` given exact
/// values `train_f` at `train_x`.
pub fn gp_conditional(
    train_x: &[f64],
    train_f: &[f64],
    test_x: &[f64],
    k: &impl Kernel,
) -> Result<(DVector<f64>, DMatrix<f64>), GpError> {
    if train_x.len() != train_f.len() {
        return Err(GpError::LengthMismatch(train_x.len(), train_f.len()));
    }
    if test_x.is_empty() {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let cov = cov_matrix(train_x, k)?;
    let l = cov.cholesky.l();
    let k_star = cross_cov(train_x, test_x, k);
    // A = L^{-1} K*, so mean = Aᵀ L^{-1} f and cov = K** − AᵀA.
    let a = l.solve_lower_triangular(&k_star).expect("triangular factor is non-singular");
    let f = DVector::from_column_slice(train_f);
    let lf = l.solve_lower_triangular(&f).expect("triangular factor is non-singular");
    let mean = a.tr_mul(&lf);
    let cov_post = cross_cov(test_x, test_x, k) - a.tr_mul(&a);
    Ok((mean, cov_post))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn drift_p(sigma_q: f64, l: f64, sigma_b: f64, sigma_l: f64, c: f64) -> DriftKernelParams {
        DriftKernelParams { sigma_q, l, sigma_b, sigma_l, c }
    }

    #[test]
    fn drift_kernel_values() {
        let p = drift_p(1.3, 0.7, 0.4, 2.0, 0.5);
        assert!((drift_kernel(0.5, 0.5, &p) - (1.69 + 0.16)).abs() < 1e-14);
        assert!((drift_kernel(0.5, 1e6, &p) - 0.16).abs() < 1e-14);
        // exp(-0.5) + 1 + 0 computed independently.
        let v = drift_kernel(0.0, 1.0, &drift_p(1.0, 1.0, 1.0, 1.0, 0.0));
        assert!((v - 1.606_530_659_712_633_4).abs() < 1e-12);
    }

    #[test]
    fn eq_kernel_values() {
        let p = DiffusionKernelParams { sigma_q: 2.0, l: 0.3 };
        assert_eq!(eq_kernel(1.0, 1.0, &p), 4.0);
        assert_eq!(eq_kernel(0.2, 1.1, &p), eq_kernel(1.1, 0.2, &p));
        let wide = DiffusionKernelParams { sigma_q: 2.0, l: 1e9 };
        assert!((eq_kernel(-3.0, 5.0, &wide) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn drift_kernel_without_linear_term() {
        let p = drift_p(1.1, 0.8, 0.6, 0.0, 3.0);
        let q = DiffusionKernelParams { sigma_q: 1.1, l: 0.8 };
        for (x, y) in [(0.0, 1.0), (-2.0, 2.5), (4.0, 4.0)] {
            assert!((drift_kernel(x, y, &p) - eq_kernel(x, y, &q) - 0.36).abs() < 1e-14);
        }
    }

    #[test]
    fn single_point_and_duplicates() {
        let p = DiffusionKernelParams { sigma_q: 1.5, l: 1.0 };
        let c = cov_matrix(&[0.3], &p).unwrap();
        assert_eq!(c.matrix.shape(), (1, 1));
        assert!((c.matrix[(0, 0)] - 2.25 - c.jitter).abs() < 1e-15);

        let c = cov_matrix(&[0.0, 0.0, 1.0, 1.0], &p).unwrap();
        assert!(c.jitter > 0.0);
        assert!(matches!(cov_matrix(&[], &p), Err(GpError::NoPoints)));
        assert!(matches!(cov_matrix(&vec![0.0; 501], &p), Err(GpError::TooManyPoints(501))));
    }

    #[test]
    fn random_sets_are_psd_after_jitter() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let pts: Vec<f64> = (0..50).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = drift_p(
                rng.random_range(0.1..3.0),
                rng.random_range(0.1..3.0),
                rng.random_range(0.1..3.0),
                rng.random_range(0.1..3.0),
                rng.random_range(-1.0..1.0),
            );
            let c = cov_matrix(&pts, &p).unwrap();
            let asym = (&c.matrix - c.matrix.transpose()).amax();
            assert!(asym <= 1e-12);
            let eig = c.matrix.clone().symmetric_eigen();
            assert!(eig.eigenvalues.min() >= 0.0, "min eig {}", eig.eigenvalues.min());
        }
    }

    #[test]
    fn conditional_interpolates_training_points() {
        let p = DiffusionKernelParams { sigma_q: 1.0, l: 0.7 };
        let xs = [-1.0, -0.2, 0.5, 1.4];
        let fs = [0.3, -0.8, 1.1, 0.0];
        let (mean, cov) = gp_conditional(&xs, &fs, &xs, &p).unwrap();
        for i in 0..4 {
            assert!((mean[i] - fs[i]).abs() < 1e-6);
            assert!(cov[(i, i)] >= -1e-10 && cov[(i, i)] < 1e-6);
        }
        let (m, c) = gp_conditional(&xs, &fs, &[], &p).unwrap();
        assert_eq!(m.len(), 0);
        assert_eq!(c.shape(), (0, 0));
        assert!(gp_conditional(&xs, &fs[..2], &xs, &p).is_err());
    }
}
