use std::f64::consts::PI;

use landscaper::gp::{drift_kernel, eq_kernel};
use landscaper::inference::{DriftDiffusionTarget, LogDensity};
use landscaper::rng;
use landscaper::stats::{linspace, mean};
use landscaper::tsdata::{Transition, TransitionSet};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

const JITTER: f64 = 1e-6;

fn transitions(n: usize, shift: f64, seed: u64) -> TransitionSet {
    let mut r = rng::stream(seed, &[]);
    let transitions = (0..n)
        .map(|_| {
            let x: f64 = r.random_range(-1.5..1.5);
            let dt = [0.1, 0.2, 0.5][r.random_range(0..3)];
            let z: f64 = r.sample(StandardNormal);
            Transition { x: x + shift, dx: (x - x * x * x) * dt + (0.5 * dt).sqrt() * z, dt }
        })
        .collect();
    TransitionSet { transitions, per_series: vec![1; n] }
}

fn target(ts: &TransitionSet, m: usize, shift: f64) -> DriftDiffusionTarget {
    DriftDiffusionTarget::new(ts, linspace(-1.8 + shift, 1.8 + shift, m), shift, JITTER)
}

fn random_state(dim: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, &[]);
    (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn log_invgamma_on_log_scale(phi: f64, shape: f64, scale: f64, ln_gamma_shape: f64) -> f64 {
    shape * scale.ln() - ln_gamma_shape - shape * phi - scale * (-phi).exp()
}

/// Whitened latent values `K(x, a) L^{-T} z` from the kernel functions.
fn latent(anchors: &[f64], xs: &[f64], z: &[f64], k: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let m = anchors.len();
    let kaa = DMatrix::from_fn(m, m, |i, j| k(anchors[i], anchors[j]) + if i == j { JITTER } else { 0.0 });
    let l = kaa.cholesky().unwrap().l();
    let w = l.transpose().solve_upper_triangular(&DVector::from_column_slice(z)).unwrap();
    xs.iter().map(|&x| anchors.iter().zip(w.iter()).map(|(&a, w)| k(x, a) * w).sum()).collect()
}

/// Independent evaluation of the log posterior from its definition.
fn direct_log_posterior(t: &DriftDiffusionTarget, ts: &TransitionSet, q: &[f64]) -> f64 {
    let m = t.n_anchors();
    let s = t.state(q);
    let xs: Vec<f64> = ts.transitions.iter().map(|t| t.x).collect();
    let f = latent(t.anchors(), &xs, &s.z_f, |a, b| drift_kernel(a, b, &s.drift_hypers));
    let g = latent(t.anchors(), &xs, &s.z_g, |a, b| eq_kernel(a, b, &s.diff_hypers));
    let mut lp = 0.0;
    for (tr, (f, g)) in ts.transitions.iter().zip(f.iter().zip(&g)) {
        let var = g.exp() * tr.dt;
        lp += -0.5 * (2.0 * PI * var).ln() - (tr.dx - f * tr.dt).powi(2) / (2.0 * var);
    }
    lp += q[..2 * m].iter().map(|z| -0.5 * (2.0 * PI).ln() - 0.5 * z * z).sum::<f64>();
    let h = &q[2 * m..];
    let ln_gamma_5 = 24f64.ln();
    for k in [0, 2, 3, 4] {
        lp += log_invgamma_on_log_scale(h[k], 2.0, 2.0, 0.0);
    }
    for k in [1, 5] {
        lp += log_invgamma_on_log_scale(h[k], 5.0, 5.0, ln_gamma_5);
    }
    lp
}

#[test]
fn log_posterior_matches_direct_evaluation() {
    let ts = transitions(60, 0.0, 1);
    let t = target(&ts, 12, 0.0);
    for seed in 0..10 {
        let q = random_state(t.dim(), seed);
        let lp = t.log_posterior(&q).unwrap().0;
        let direct = direct_log_posterior(&t, &ts, &q);
        assert!((lp - direct).abs() <= 1e-8 * direct.abs().max(1.0), "{lp} vs {direct}");
    }
}

#[test]
fn without_data_the_latent_gradient_is_minus_z() {
    let t = target(&TransitionSet::empty(), 10, 0.0);
    let q = random_state(t.dim(), 4);
    let (_, grad) = t.log_posterior(&q).unwrap();
    for i in 0..20 {
        assert!((grad[i] + q[i]).abs() < 1e-12, "coordinate {i}");
    }
}

#[test]
fn shifting_states_anchors_and_centre_leaves_the_density_unchanged() {
    let base = transitions(40, 0.0, 2);
    let shifted = transitions(40, 3.7, 2);
    let t0 = target(&base, 10, 0.0);
    let t1 = target(&shifted, 10, 3.7);
    for seed in 0..5 {
        let q = random_state(t0.dim(), seed);
        let (a, ga) = t0.log_posterior(&q).unwrap();
        let (b, gb) = t1.log_posterior(&q).unwrap();
        assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} vs {b}");
        for (x, y) in ga.iter().zip(&gb) {
            assert!((x - y).abs() < 1e-6 * x.abs().max(1.0));
        }
    }
}

#[test]
fn transition_order_does_not_matter() {
    let ts = transitions(50, 0.0, 3);
    let mut shuffled = ts.clone();
    shuffled.transitions.shuffle(&mut rng::stream(9, &[]));
    let (a, b) = (target(&ts, 10, 0.0), target(&shuffled, 10, 0.0));
    let q = random_state(a.dim(), 6);
    let (la, ga) = a.log_posterior(&q).unwrap();
    let (lb, gb) = b.log_posterior(&q).unwrap();
    assert!((la - lb).abs() < 1e-9 * la.abs().max(1.0));
    for (x, y) in ga.iter().zip(&gb) {
        assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
    }
}

#[test]
fn whitened_prior_reproduces_the_kernel_covariance() {
    let t = target(&TransitionSet::empty(), 15, 0.0);
    let m = t.n_anchors();
    let query = [-1.2, -0.3, 0.4, 1.5];
    let hypers = random_state(t.dim(), 5)[2 * m..].to_vec();
    let mut r = rng::stream(12, &[]);
    let n = 10_000;
    let mut f_samples = vec![Vec::with_capacity(n); query.len()];
    for _ in 0..n {
        let mut q: Vec<f64> = (0..2 * m).map(|_| r.sample(StandardNormal)).collect();
        q.extend_from_slice(&hypers);
        let (f, _) = t.latents_at(&q, &query).unwrap();
        for (k, v) in f.into_iter().enumerate() {
            f_samples[k].push(v);
        }
    }
    let s = t.state(&{
        let mut q = vec![0.0; 2 * m];
        q.extend_from_slice(&hypers);
        q
    });
    for i in 0..query.len() {
        for j in 0..=i {
            let (mi, mj) = (mean(&f_samples[i]), mean(&f_samples[j]));
            let cov = f_samples[i].iter().zip(&f_samples[j]).map(|(a, b)| (a - mi) * (b - mj)).sum::<f64>() / (n - 1) as f64;
            let kernel = drift_kernel(query[i], query[j], &s.drift_hypers);
            let scale = (drift_kernel(query[i], query[i], &s.drift_hypers) * drift_kernel(query[j], query[j], &s.drift_hypers)).sqrt();
            assert!((cov - kernel).abs() < 0.05 * scale, "({i},{j}): {cov} vs {kernel}");
        }
    }
}
