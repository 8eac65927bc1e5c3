//! Log posterior of the drift/log-diffusion model and its exact gradient.
//!
//! Both latent functions are represented by their values at a fixed set of
//! anchor states in whitened form: `u = L z` with `L L^T = K(anchors) + jI`
//! and `z ~ N(0, I)`. Values elsewhere are the GP conditional mean given the
//! anchors, `h(x) = k(x, anchors) K^{-1} u = (L^{-1} k(anchors, x))^T z`.
//!
//! Hyperparameters are sampled as logarithms of the kernel variances and
//! length scales; Inverse-Gamma priors act on the natural scale and the
//! log-Jacobian is included.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::gp::{DiffusionKernelParams, DriftKernelParams};
use crate::tsdata::TransitionSet;

use super::nuts::LogDensity;
use super::InferenceError;

/// Inverse-Gamma shape/scale for kernel variances.
pub const VARIANCE_PRIOR: (f64, f64) = (2.0, 2.0);
/// Inverse-Gamma shape/scale for length scales.
pub const LENGTH_SCALE_PRIOR: (f64, f64) = (5.0, 5.0);

pub const N_DRIFT_HYPERS: usize = 4;
pub const N_DIFF_HYPERS: usize = 2;

/// Names of the hyperparameter coordinates, in state-vector order.
pub const HYPER_NAMES: [&str; 6] = [
    "log_drift_sigma_q2",
    "log_drift_l",
    "log_drift_sigma_b2",
    "log_drift_sigma_l2",
    "log_diff_sigma_q2",
    "log_diff_l",
];

/// Point in parameter space, on the natural scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub z_f: Vec<f64>,
    pub z_g: Vec<f64>,
    pub drift_hypers: DriftKernelParams,
    pub diff_hypers: DiffusionKernelParams,
}

impl ModelState {
    /// Packs into the unconstrained sampling vector
    /// `[z_f, z_g, log σq², log l, log σb², log σl², log σq,g², log l_g]`.
    pub fn to_unconstrained(&self) -> Vec<f64> {
        let d = &self.drift_hypers;
        let g = &self.diff_hypers;
        let mut q = Vec::with_capacity(self.z_f.len() * 2 + 6);
        q.extend_from_slice(&self.z_f);
        q.extend_from_slice(&self.z_g);
        q.extend([
            2.0 * d.sigma_q.ln(),
            d.l.ln(),
            2.0 * d.sigma_b.ln(),
            2.0 * d.sigma_l.ln(),
            2.0 * g.sigma_q.ln(),
            g.l.ln(),
        ]);
        q
    }

    pub fn from_unconstrained(q: &[f64], n_anchors: usize, c: f64) -> Self {
        let m = n_anchors;
        let h = &q[2 * m..];
        Self {
            z_f: q[..m].to_vec(),
            z_g: q[m..2 * m].to_vec(),
            drift_hypers: DriftKernelParams {
                sigma_q: (0.5 * h[0]).exp(),
                l: h[1].exp(),
                sigma_b: (0.5 * h[2]).exp(),
                sigma_l: (0.5 * h[3]).exp(),
                c,
            },
            diff_hypers: DiffusionKernelParams { sigma_q: (0.5 * h[4]).exp(), l: h[5].exp() },
        }
    }
}

/// Log density of `log y` when `y ~ InvGamma(shape, scale)`, Jacobian included.
fn log_invgamma_logscale(phi: f64, (shape, scale): (f64, f64)) -> (f64, f64) {
    let e = (-phi).exp();
    let lp = shape * scale.ln() - ln_gamma_int(shape) - shape * phi - scale * e;
    (lp, -shape + scale * e)
}

fn ln_gamma_int(a: f64) -> f64 {
    // Both prior shapes are small integers: Γ(n) = (n−1)!.
    debug_assert!(a.fract() == 0.0 && a >= 1.0);
    (1..a as u64).map(|k| (k as f64).ln()).sum()
}

/// Kernel for one latent function with per-hyperparameter derivatives
/// taken with respect to the log-scale coordinates.
#[derive(Debug, Clone, Copy)]
enum LatentKernel {
    Drift(DriftKernelParams),
    LogDiffusion(DiffusionKernelParams),
}

impl LatentKernel {
    fn n_hypers(&self) -> usize {
        match self {
            LatentKernel::Drift(_) => N_DRIFT_HYPERS,
            LatentKernel::LogDiffusion(_) => N_DIFF_HYPERS,
        }
    }

    #[inline]
    fn eval_with_grad(&self, x: f64, y: f64, d: &mut [f64]) -> f64 {
        match self {
            LatentKernel::Drift(p) => {
                let r = x - y;
                let s2 = p.sigma_q * p.sigma_q;
                let eq = s2 * (-r * r / (2.0 * p.l * p.l)).exp();
                let b2 = p.sigma_b * p.sigma_b;
                let lin = p.sigma_l * p.sigma_l * (x - p.c) * (y - p.c);
                d[0] = eq;
                d[1] = eq * r * r / (p.l * p.l);
                d[2] = b2;
                d[3] = lin;
                eq + b2 + lin
            }
            LatentKernel::LogDiffusion(p) => {
                let r = x - y;
                let eq = p.sigma_q * p.sigma_q * (-r * r / (2.0 * p.l * p.l)).exp();
                d[0] = eq;
                d[1] = eq * r * r / (p.l * p.l);
                eq
            }
        }
    }

    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        let mut d = [0.0; N_DRIFT_HYPERS];
        self.eval_with_grad(x, y, &mut d)
    }
}

/// Whitened GP latent evaluated at a set of query states.
struct LatentEval {
    chol_l: DMatrix<f64>,
    /// `K(anchors, query)`, anchors × queries.
    kx: DMatrix<f64>,
    /// `L^{-T} z`, so that the latent values are `kxᵀ w`.
    w: DVector<f64>,
    values: DVector<f64>,
    /// Squared-exponential part of `K(anchors, query)`, reused by the gradient.
    eq: DMatrix<f64>,
}

fn factor(anchors: &[f64], k: &LatentKernel, jitter: f64) -> Option<DMatrix<f64>> {
    let m = anchors.len();
    let kmat = DMatrix::from_fn(m, m, |i, j| k.eval(anchors[i], anchors[j]) + if i == j { jitter } else { 0.0 });
    if !kmat.iter().all(|v| v.is_finite()) {
        return None;
    }
    Cholesky::new(kmat).map(|c| c.unpack())
}

/// Common step of `anchors` when they are equispaced.
fn uniform_spacing(anchors: &[f64]) -> Option<f64> {
    let m = anchors.len();
    if m < 2 {
        return None;
    }
    let step = (anchors[m - 1] - anchors[0]) / (m - 1) as f64;
    let uniform = step > 0.0
        && anchors.iter().enumerate().all(|(i, &a)| (a - (anchors[0] + i as f64 * step)).abs() <= 1e-9 * step);
    uniform.then_some(step)
}

/// `σ² exp(−(a − x)²/2l²)` for every anchor `a` and query `x`. On an
/// equispaced anchor set each column is built outward from the nearest
/// anchor by multiplying successive ratios, which needs three exponentials
/// per column instead of one per entry.
fn eq_matrix(anchors: &[f64], query: &[f64], s2: f64, l: f64) -> DMatrix<f64> {
    let m = anchors.len();
    let inv_l2 = 1.0 / (l * l);
    let Some(step) = uniform_spacing(anchors) else {
        return DMatrix::from_fn(m, query.len(), |i, n| {
            let r = anchors[i] - query[n];
            s2 * (-0.5 * r * r * inv_l2).exp()
        });
    };
    let ratio_decay = (-step * step * inv_l2).exp();
    let half = 0.5 * step * step * inv_l2;
    let mut out = DMatrix::zeros(m, query.len());
    for (n, &x) in query.iter().enumerate() {
        let col = out.column_mut(n);
        let col = col.data.into_slice_mut();
        let centre = (((x - anchors[0]) / step).round().max(0.0) as usize).min(m - 1);
        let r = anchors[centre] - x;
        col[centre] = s2 * (-0.5 * r * r * inv_l2).exp();
        let mut g = (-r * step * inv_l2 - half).exp();
        for i in centre + 1..m {
            col[i] = col[i - 1] * g;
            if col[i] == 0.0 {
                break;
            }
            g *= ratio_decay;
        }
        let mut g = (r * step * inv_l2 - half).exp();
        for i in (0..centre).rev() {
            col[i] = col[i + 1] * g;
            if col[i] == 0.0 {
                break;
            }
            g *= ratio_decay;
        }
    }
    out
}

fn latent_at(anchors: &[f64], query: &[f64], z: &[f64], k: &LatentKernel, jitter: f64) -> Option<LatentEval> {
    let chol_l = factor(anchors, k, jitter)?;
    let (s2, l) = match k {
        LatentKernel::Drift(p) => (p.sigma_q * p.sigma_q, p.l),
        LatentKernel::LogDiffusion(p) => (p.sigma_q * p.sigma_q, p.l),
    };
    let eq = eq_matrix(anchors, query, s2, l);
    let kx = match k {
        LatentKernel::Drift(p) => {
            let b2 = p.sigma_b * p.sigma_b;
            let sl2 = p.sigma_l * p.sigma_l;
            DMatrix::from_fn(anchors.len(), query.len(), |i, n| {
                eq[(i, n)] + b2 + sl2 * (anchors[i] - p.c) * (query[n] - p.c)
            })
        }
        LatentKernel::LogDiffusion(_) => eq.clone(),
    };
    let w = chol_l.tr_solve_lower_triangular(&DVector::from_column_slice(z))?;
    let values = kx.tr_mul(&w);
    Some(LatentEval { chol_l, kx, w, values, eq })
}

/// Posterior target over `[z_f, z_g, log-hypers]`.
#[derive(Debug, Clone)]
pub struct DriftDiffusionTarget {
    anchors: Vec<f64>,
    c: f64,
    jitter: f64,
    xs: Vec<f64>,
    dxs: Vec<f64>,
    dts: Vec<f64>,
}

/// Decomposition of the log posterior into its terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPosteriorTerms {
    pub likelihood: f64,
    pub latent_prior: f64,
    pub hyper_prior: f64,
}

impl LogPosteriorTerms {
    pub fn total(&self) -> f64 {
        self.likelihood + self.latent_prior + self.hyper_prior
    }
}

impl DriftDiffusionTarget {
    pub fn new(transitions: &TransitionSet, anchors: Vec<f64>, c: f64, jitter: f64) -> Self {
        let t = &transitions.transitions;
        Self {
            anchors,
            c,
            jitter,
            xs: t.iter().map(|t| t.x).collect(),
            dxs: t.iter().map(|t| t.dx).collect(),
            dts: t.iter().map(|t| t.dt).collect(),
        }
    }

    pub fn anchors(&self) -> &[f64] {
        &self.anchors
    }

    pub fn centre(&self) -> f64 {
        self.c
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n_transitions(&self) -> usize {
        self.xs.len()
    }

    pub fn n_anchors(&self) -> usize {
        self.anchors.len()
    }

    pub fn state(&self, q: &[f64]) -> ModelState {
        ModelState::from_unconstrained(q, self.anchors.len(), self.c)
    }

    /// Drift and log-diffusion values at arbitrary states for a given
    /// parameter vector.
    pub fn latents_at(&self, q: &[f64], query: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let s = self.state(q);
        let f = latent_at(&self.anchors, query, &s.z_f, &LatentKernel::Drift(s.drift_hypers), self.jitter)?;
        let g = latent_at(&self.anchors, query, &s.z_g, &LatentKernel::LogDiffusion(s.diff_hypers), self.jitter)?;
        Some((f.values.as_slice().to_vec(), g.values.as_slice().to_vec()))
    }

    /// Log posterior split into terms, without gradient.
    pub fn terms(&self, q: &[f64]) -> Option<LogPosteriorTerms> {
        let (f, g) = self.latents_at(q, &self.xs)?;
        let likelihood = f
            .iter()
            .zip(&g)
            .zip(self.dxs.iter().zip(&self.dts))
            .map(|((&f, &gh), (&dx, &dt))| {
                let var = gh.exp() * dt;
                let r = dx - f * dt;
                -0.5 * (2.0 * PI * var).ln() - r * r / (2.0 * var)
            })
            .sum();
        let (latent_prior, hyper_prior) = self.prior_terms(q, None);
        Some(LogPosteriorTerms { likelihood, latent_prior, hyper_prior })
    }

    fn prior_terms(&self, q: &[f64], mut grad: Option<&mut [f64]>) -> (f64, f64) {
        let m2 = 2 * self.anchors.len();
        let mut latent = -0.5 * m2 as f64 * (2.0 * PI).ln();
        for (i, z) in q[..m2].iter().enumerate() {
            latent -= 0.5 * z * z;
            if let Some(g) = grad.as_deref_mut() {
                g[i] -= z;
            }
        }
        let priors = [VARIANCE_PRIOR, LENGTH_SCALE_PRIOR, VARIANCE_PRIOR, VARIANCE_PRIOR, VARIANCE_PRIOR, LENGTH_SCALE_PRIOR];
        let mut hyper = 0.0;
        for (k, prior) in priors.into_iter().enumerate() {
            let (lp, d) = log_invgamma_logscale(q[m2 + k], prior);
            hyper += lp;
            if let Some(g) = grad.as_deref_mut() {
                g[m2 + k] += d;
            }
        }
        (latent, hyper)
    }

    /// Gradient contribution of one latent function given the adjoint `adj`
    /// of the log density with respect to its values at the data states.
    fn latent_gradient(
        &self,
        eval: &LatentEval,
        z: &[f64],
        k: &LatentKernel,
        adj: &DVector<f64>,
        grad_z: &mut [f64],
        grad_h: &mut [f64],
    ) -> Option<()> {
        let m = self.anchors.len();
        let nh = k.n_hypers();
        let b = eval.chol_l.solve_lower_triangular(&(&eval.kx * adj))?;
        grad_z.iter_mut().zip(b.iter()).for_each(|(g, v)| *g += v);
        let w = &eval.w;

        // First term: wᵀ (∂K(anchors, x)/∂θ) adj.
        let (l2, linear) = match k {
            LatentKernel::Drift(p) => (p.l * p.l, Some((p.sigma_b * p.sigma_b, p.sigma_l * p.sigma_l, p.c))),
            LatentKernel::LogDiffusion(p) => (p.l * p.l, None),
        };
        let mut s_eq = vec![0.0; m];
        let mut s_r2 = vec![0.0; m];
        for (n, &x) in self.xs.iter().enumerate() {
            let a = adj[n];
            let col = eval.eq.column(n);
            for i in 0..m {
                let e = col[i] * a;
                let r = self.anchors[i] - x;
                s_eq[i] += e;
                s_r2[i] += e * r * r;
            }
        }
        for i in 0..m {
            grad_h[0] += w[i] * s_eq[i];
            grad_h[1] += w[i] * s_r2[i] / l2;
        }
        if let Some((b2, sl2, c)) = linear {
            let sum_adj: f64 = adj.iter().sum();
            let sum_lin: f64 = self.xs.iter().zip(adj.iter()).map(|(x, a)| (x - c) * a).sum();
            for i in 0..m {
                grad_h[2] += w[i] * b2 * sum_adj;
                grad_h[3] += w[i] * sl2 * (self.anchors[i] - c) * sum_lin;
            }
        }

        // Second term: −zᵀ Φ(L^{-1} ∂K_a L^{-T}) b, with Φ the lower triangle
        // and halved diagonal (derivative of the Cholesky factor). Equal to
        // −Σ ∂K_a ⊙ S with S = L^{-T} Qᵀ L^{-1} and Q = Φ(z bᵀ).
        let q = DMatrix::from_fn(m, m, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => z[i] * b[j],
            std::cmp::Ordering::Equal => 0.5 * z[i] * b[i],
            std::cmp::Ordering::Less => 0.0,
        });
        let x = eval.chol_l.tr_solve_lower_triangular(&q)?;
        let sm = eval.chol_l.tr_solve_lower_triangular(&x.transpose())?;
        let mut d = [0.0; N_DRIFT_HYPERS];
        let mut acc = [0.0; N_DRIFT_HYPERS];
        for i in 0..m {
            for j in 0..=i {
                k.eval_with_grad(self.anchors[i], self.anchors[j], &mut d);
                let wgt = if i == j { sm[(i, i)] } else { sm[(i, j)] + sm[(j, i)] };
                for h in 0..nh {
                    acc[h] += d[h] * wgt;
                }
            }
        }
        for h in 0..nh {
            grad_h[h] -= acc[h];
        }
        Some(())
    }

    /// Log posterior and its gradient; `None` when the state is numerically
    /// invalid (failed factorization or non-finite density).
    pub fn log_posterior(&self, q: &[f64]) -> Option<(f64, Vec<f64>)> {
        let m = self.anchors.len();
        if q.len() != 2 * m + N_DRIFT_HYPERS + N_DIFF_HYPERS || !q.iter().all(|v| v.is_finite()) {
            return None;
        }
        let s = self.state(q);
        let kf = LatentKernel::Drift(s.drift_hypers);
        let kg = LatentKernel::LogDiffusion(s.diff_hypers);
        let fe = latent_at(&self.anchors, &self.xs, &s.z_f, &kf, self.jitter)?;
        let ge = latent_at(&self.anchors, &self.xs, &s.z_g, &kg, self.jitter)?;

        let n = self.xs.len();
        let mut adj_f = DVector::zeros(n);
        let mut adj_g = DVector::zeros(n);
        let mut ll = 0.0;
        for i in 0..n {
            let (f, gh, dx, dt) = (fe.values[i], ge.values[i], self.dxs[i], self.dts[i]);
            let g = gh.exp();
            let var = g * dt;
            let r = dx - f * dt;
            ll += -0.5 * (2.0 * PI * var).ln() - r * r / (2.0 * var);
            adj_f[i] = r / g;
            adj_g[i] = -0.5 + r * r / (2.0 * var);
        }

        let mut grad = vec![0.0; q.len()];
        let (latent, hyper) = self.prior_terms(q, Some(&mut grad));
        let (gz, gh) = grad.split_at_mut(2 * m);
        let (gzf, gzg) = gz.split_at_mut(m);
        let (ghf, ghg) = gh.split_at_mut(N_DRIFT_HYPERS);
        self.latent_gradient(&fe, &s.z_f, &kf, &adj_f, gzf, ghf)?;
        self.latent_gradient(&ge, &s.z_g, &kg, &adj_g, gzg, ghg)?;

        let lp = ll + latent + hyper;
        if !lp.is_finite() || !grad.iter().all(|g| g.is_finite()) {
            return None;
        }
        Some((lp, grad))
    }
}

impl DriftDiffusionTarget {
    /// [`Self::log_posterior`] with the failing component named on error.
    pub fn try_log_posterior(&self, q: &[f64]) -> Result<(f64, Vec<f64>), InferenceError> {
        if let Some(r) = self.log_posterior(q) {
            return Ok(r);
        }
        let component = if q.len() != self.dim() {
            "state dimension"
        } else if !q.iter().all(|v| v.is_finite()) {
            "parameters"
        } else {
            let s = self.state(q);
            if factor(&self.anchors, &LatentKernel::Drift(s.drift_hypers), self.jitter).is_none() {
                "drift covariance"
            } else if factor(&self.anchors, &LatentKernel::LogDiffusion(s.diff_hypers), self.jitter).is_none() {
                "diffusion covariance"
            } else {
                match self.terms(q) {
                    Some(t) if !t.likelihood.is_finite() => "likelihood",
                    Some(t) if !t.latent_prior.is_finite() => "latent prior",
                    Some(t) if !t.hyper_prior.is_finite() => "hyperparameter prior",
                    _ => "gradient",
                }
            }
        };
        Err(InferenceError::NonFinite { component: component.into() })
    }
}

impl LogDensity for DriftDiffusionTarget {
    fn dim(&self) -> usize {
        2 * self.anchors.len() + N_DRIFT_HYPERS + N_DIFF_HYPERS
    }

    fn log_density(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        match self.log_posterior(q) {
            Some((lp, g)) => {
                grad.copy_from_slice(&g);
                lp
            }
            None => f64::NEG_INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsdata::Transition;
    use rand::{Rng, SeedableRng};

    fn target(n: usize, seed: u64) -> DriftDiffusionTarget {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let transitions = (0..n)
            .map(|_| Transition {
                x: rng.random_range(-1.5..1.5),
                dx: rng.random_range(-0.5..0.5),
                dt: rng.random_range(0.05..0.5),
            })
            .collect();
        let ts = TransitionSet { transitions, per_series: vec![n] };
        DriftDiffusionTarget::new(&ts, crate::stats::linspace(-2.0, 2.0, 8), 0.0, 1e-6)
    }

    fn random_state(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn eq_recurrence_matches_direct_evaluation() {
        let anchors: Vec<f64> = (0..30).map(|i| -2.2 + i as f64 * 4.4 / 29.0).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let query: Vec<f64> = (0..200).map(|_| rng.random_range(-3.0..3.0)).collect();
        for l in [0.01, 0.1, 0.7, 5.0, 100.0] {
            let fast = eq_matrix(&anchors, &query, 1.7, l);
            for (n, &x) in query.iter().enumerate() {
                for (i, &a) in anchors.iter().enumerate() {
                    let arg = (a - x) * (a - x) / (2.0 * l * l);
                    let direct = 1.7 * (-arg).exp();
                    let err = (fast[(i, n)] - direct).abs();
                    assert!(err <= 1e-13 * (1.0 + arg) * direct || err < 1e-290, "l {l} a {a} x {x}: {} vs {direct}", fast[(i, n)]);
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = target(40, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let q = random_state(t.dim(), &mut rng);
            let (_, g) = t.log_posterior(&q).unwrap();
            for i in 0..q.len() {
                let h = 1e-5;
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[i] += h;
                qm[i] -= h;
                let fd = (t.log_posterior(&qp).unwrap().0 - t.log_posterior(&qm).unwrap().0) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-5 * fd.abs().max(1.0), "coord {i}: fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn terms_agree_with_gradient_path() {
        let t = target(25, 9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let q = random_state(t.dim(), &mut rng);
        let lp = t.log_posterior(&q).unwrap().0;
        assert!((t.terms(&q).unwrap().total() - lp).abs() < 1e-9);
    }

    #[test]
    fn state_roundtrip() {
        let t = target(5, 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let q = random_state(t.dim(), &mut rng);
        let back = t.state(&q).to_unconstrained();
        for (a, b) in q.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_states_rejected() {
        let t = target(5, 2);
        let mut q = vec![0.0; t.dim()];
        q[0] = f64::NAN;
        assert!(t.log_posterior(&q).is_none());
        assert!(t.log_posterior(&q[1..]).is_none());
        let mut grad = vec![0.0; t.dim()];
        assert_eq!(t.log_density(&q, &mut grad), f64::NEG_INFINITY);
        let err = t.try_log_posterior(&q).unwrap_err().to_string();
        assert!(err.contains("parameters"), "{err}");
        let mut huge = vec![0.0; t.dim()];
        huge[2 * t.n_anchors()] = 800.0;
        assert!(t.try_log_posterior(&huge).is_err());
    }
}
