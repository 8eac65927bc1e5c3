//! Hamiltonian Monte Carlo with the No-U-Turn trajectory length rule
//! (multinomial sampling, generalized U-turn criterion), dual-averaging
//! step-size adaptation and a diagonal mass matrix estimated in expanding
//! warmup windows.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{self, StreamRng};

use super::InferenceError;

/// A differentiable log density.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    /// Writes the gradient into `grad` and returns the log density; a
    /// non-finite return marks an invalid point.
    fn log_density(&self, q: &[f64], grad: &mut [f64]) -> f64;
}

/// Sampler settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_chains: usize,
    /// Total iterations per chain, warmup included.
    pub n_iterations: usize,
    /// Warmup iterations; `None` means half of `n_iterations`.
    pub n_warmup: Option<usize>,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    /// Half-width of the uniform jitter applied to initial points.
    pub init_radius: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_chains: 4,
            n_iterations: 2000,
            n_warmup: None,
            target_accept: 0.8,
            max_tree_depth: 10,
            init_radius: 2.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn warmup(&self) -> usize {
        self.n_warmup.unwrap_or(self.n_iterations / 2)
    }
}

/// Post-warmup output of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub draws: Vec<Vec<f64>>,
    pub log_density: Vec<f64>,
    pub divergences: usize,
    pub warmup_divergences: usize,
    pub step_size: f64,
    pub inv_mass: Vec<f64>,
    pub mean_accept: f64,
    pub mean_tree_depth: f64,
    pub n_leapfrog: usize,
}

const DIVERGENCE_THRESHOLD: f64 = 1000.0;
const MAX_INIT_ATTEMPTS: usize = 100;

#[derive(Clone)]
struct Point {
    q: Vec<f64>,
    p: Vec<f64>,
    grad: Vec<f64>,
    lp: f64,
}

struct Hamiltonian<'a, T: LogDensity + ?Sized> {
    target: &'a T,
    inv_mass: Vec<f64>,
    step: f64,
}

impl<T: LogDensity + ?Sized> Hamiltonian<'_, T> {
    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p.iter().zip(&self.inv_mass).map(|(p, m)| p * p * m).sum::<f64>()
    }

    fn energy(&self, pt: &Point) -> f64 {
        -pt.lp + self.kinetic(&pt.p)
    }

    fn velocity(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.inv_mass).map(|(p, m)| p * m).collect()
    }

    /// One leapfrog step of signed size `dir · step`.
    fn leapfrog(&self, pt: &Point, dir: f64) -> Point {
        let e = dir * self.step;
        let mut p: Vec<f64> = pt.p.iter().zip(&pt.grad).map(|(p, g)| p + 0.5 * e * g).collect();
        let q: Vec<f64> = pt.q.iter().zip(p.iter().zip(&self.inv_mass)).map(|(q, (p, m))| q + e * m * p).collect();
        let mut grad = vec![0.0; q.len()];
        let lp = self.target.log_density(&q, &mut grad);
        if lp.is_finite() {
            p.iter_mut().zip(&grad).for_each(|(p, g)| *p += 0.5 * e * g);
        }
        Point { q, p, grad, lp }
    }

    fn sample_momentum(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.inv_mass
            .iter()
            .map(|m| {
                let z: f64 = rng.sample(StandardNormal);
                z / m.sqrt()
            })
            .collect()
    }
}

struct Subtree {
    left: Point,
    right: Point,
    proposal: Point,
    log_weight: f64,
    rho: Vec<f64>,
    n_leapfrog: usize,
    sum_accept: f64,
    divergent: bool,
    turning: bool,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `true` when the trajectory spanned by momenta sum `rho` is turning back.
fn turning<T: LogDensity + ?Sized>(h: &Hamiltonian<'_, T>, rho: &[f64], p_left: &[f64], p_right: &[f64]) -> bool {
    dot(rho, &h.velocity(p_left)) <= 0.0 || dot(rho, &h.velocity(p_right)) <= 0.0
}

fn leaf<T: LogDensity + ?Sized>(h: &Hamiltonian<'_, T>, from: &Point, dir: f64, h0: f64) -> Subtree {
    let pt = h.leapfrog(from, dir);
    let energy = if pt.lp.is_finite() { h.energy(&pt) } else { f64::INFINITY };
    let err = energy - h0;
    let divergent = !err.is_finite() || err > DIVERGENCE_THRESHOLD;
    let log_weight = if divergent { f64::NEG_INFINITY } else { -err };
    let accept = if err.is_finite() { (-err).exp().min(1.0) } else { 0.0 };
    Subtree {
        left: pt.clone(),
        right: pt.clone(),
        rho: pt.p.clone(),
        proposal: pt,
        log_weight,
        n_leapfrog: 1,
        sum_accept: accept,
        divergent,
        turning: false,
    }
}

fn build_tree<T: LogDensity + ?Sized>(
    h: &Hamiltonian<'_, T>,
    from: &Point,
    depth: usize,
    dir: f64,
    h0: f64,
    rng: &mut StreamRng,
) -> Subtree {
    if depth == 0 {
        return leaf(h, from, dir, h0);
    }
    let first = build_tree(h, from, depth - 1, dir, h0, rng);
    if first.divergent || first.turning {
        return first;
    }
    let edge = if dir > 0.0 { &first.right } else { &first.left };
    let second = build_tree(h, edge, depth - 1, dir, h0, rng);
    if second.divergent || second.turning {
        return Subtree { n_leapfrog: first.n_leapfrog + second.n_leapfrog, sum_accept: first.sum_accept + second.sum_accept, ..second };
    }
    join(h, first, second, dir, false, rng)
}

/// Joins `old` with the freshly built `new` subtree lying in direction `dir`.
/// At the top level the proposal is chosen by biased progressive sampling.
fn join<T: LogDensity + ?Sized>(
    h: &Hamiltonian<'_, T>,
    old: Subtree,
    new: Subtree,
    dir: f64,
    top_level: bool,
    rng: &mut StreamRng,
) -> Subtree {
    let log_weight = log_add(old.log_weight, new.log_weight);
    let p_new = if top_level {
        (new.log_weight - old.log_weight).exp().min(1.0)
    } else {
        (new.log_weight - log_weight).exp()
    };
    let u: f64 = rng.random();
    let (left_tree, right_tree) = if dir > 0.0 { (&old, &new) } else { (&new, &old) };
    let rho = add(&left_tree.rho, &right_tree.rho);
    let left = left_tree.left.clone();
    let right = right_tree.right.clone();

    let mut turn = turning(h, &rho, &left.p, &right.p);
    // Extra checks across the junction of the two halves.
    let rho_l = add(&left_tree.rho, &right_tree.left.p);
    turn |= turning(h, &rho_l, &left.p, &right_tree.left.p);
    let rho_r = add(&right_tree.rho, &left_tree.right.p);
    turn |= turning(h, &rho_r, &left_tree.right.p, &right.p);

    let proposal = if u < p_new { new.proposal } else { old.proposal };
    Subtree {
        left,
        right,
        proposal,
        log_weight,
        rho,
        n_leapfrog: old.n_leapfrog + new.n_leapfrog,
        sum_accept: old.sum_accept + new.sum_accept,
        divergent: false,
        turning: turn,
    }
}

struct Transition {
    point: Point,
    accept: f64,
    divergent: bool,
    depth: usize,
    n_leapfrog: usize,
}

fn transition<T: LogDensity + ?Sized>(h: &Hamiltonian<'_, T>, current: &Point, max_depth: usize, rng: &mut StreamRng) -> Transition {
    let mut start = current.clone();
    start.p = h.sample_momentum(rng);
    let h0 = h.energy(&start);
    let mut tree = Subtree {
        left: start.clone(),
        right: start.clone(),
        rho: start.p.clone(),
        proposal: start,
        log_weight: 0.0,
        n_leapfrog: 0,
        sum_accept: 0.0,
        divergent: false,
        turning: false,
    };
    let mut depth = 0;
    let mut divergent = false;
    while depth < max_depth {
        let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let edge = if dir > 0.0 { tree.right.clone() } else { tree.left.clone() };
        let sub = build_tree(h, &edge, depth, dir, h0, rng);
        depth += 1;
        if sub.divergent || sub.turning {
            tree.n_leapfrog += sub.n_leapfrog;
            tree.sum_accept += sub.sum_accept;
            divergent = sub.divergent;
            break;
        }
        tree = join(h, tree, sub, dir, true, rng);
        if tree.turning {
            break;
        }
    }
    let accept = if tree.n_leapfrog > 0 { tree.sum_accept / tree.n_leapfrog as f64 } else { 0.0 };
    let mut point = tree.proposal;
    point.p.iter_mut().for_each(|p| *p = 0.0);
    Transition { point, accept, divergent, depth, n_leapfrog: tree.n_leapfrog }
}

/// Nesterov dual averaging of `log step` toward a target acceptance rate.
struct DualAveraging {
    mu: f64,
    target: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(step: f64, target: f64) -> Self {
        Self { mu: (10.0 * step).ln(), target, counter: 0.0, s_bar: 0.0, x_bar: 0.0 }
    }

    fn update(&mut self, accept: f64) -> f64 {
        self.counter += 1.0;
        let eta = 1.0 / (self.counter + Self::T0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target - accept.min(1.0));
        let x = self.mu - self.s_bar * self.counter.sqrt() / Self::GAMMA;
        let w = self.counter.powf(-Self::KAPPA);
        self.x_bar = (1.0 - w) * self.x_bar + w * x;
        x.exp()
    }

    fn final_step(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Expanding windows `[start, end)` during which draws feed the mass matrix.
fn adaptation_windows(n_warmup: usize) -> Vec<(usize, usize)> {
    let (mut init, mut term, mut base) = (75, 50, 25);
    if n_warmup < 20 {
        return Vec::new();
    }
    if init + term + base > n_warmup {
        init = n_warmup * 15 / 100;
        term = n_warmup / 10;
        base = n_warmup - init - term;
    }
    let last = n_warmup - term;
    let mut windows = Vec::new();
    let (mut start, mut size) = (init, base);
    while start < last {
        let mut end = (start + size).min(last);
        if end + 2 * size > last {
            end = last;
        }
        windows.push((start, end));
        start = end;
        size *= 2;
    }
    windows
}

/// Heuristic initial step size: double or halve until the one-step
/// acceptance crosses 0.8.
fn initial_step<T: LogDensity + ?Sized>(h: &mut Hamiltonian<'_, T>, at: &Point, rng: &mut StreamRng) {
    let mut start = at.clone();
    start.p = h.sample_momentum(rng);
    let h0 = h.energy(&start);
    let delta_of = |h: &Hamiltonian<'_, T>| {
        let pt = h.leapfrog(&start, 1.0);
        if pt.lp.is_finite() {
            h0 - h.energy(&pt)
        } else {
            f64::NEG_INFINITY
        }
    };
    let dir: f64 = if delta_of(h) > 0.8f64.ln() { 1.0 } else { -1.0 };
    for _ in 0..100 {
        h.step *= 2f64.powf(dir);
        let d = delta_of(h);
        if (dir > 0.0 && d <= 0.8f64.ln()) || (dir < 0.0 && d > 0.8f64.ln()) {
            break;
        }
    }
    if !h.step.is_finite() || h.step <= 0.0 {
        h.step = 1e-3;
    }
}

fn initial_point<T: LogDensity + ?Sized>(
    target: &T,
    init: Option<&[f64]>,
    radius: f64,
    rng: &mut StreamRng,
) -> Result<Point, InferenceError> {
    let dim = target.dim();
    for _ in 0..MAX_INIT_ATTEMPTS {
        let q: Vec<f64> = (0..dim)
            .map(|i| init.map_or(0.0, |c| c[i]) + if radius > 0.0 { rng.random_range(-radius..radius) } else { 0.0 })
            .collect();
        let mut grad = vec![0.0; dim];
        let lp = target.log_density(&q, &mut grad);
        if lp.is_finite() && grad.iter().all(|g| g.is_finite()) {
            return Ok(Point { q, p: vec![0.0; dim], grad, lp });
        }
    }
    Err(InferenceError::Initialization { attempts: MAX_INIT_ATTEMPTS })
}

fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    init: Option<&[f64]>,
    cfg: &SamplerConfig,
    chain: usize,
) -> Result<ChainOutput, InferenceError> {
    let mut rng = rng::stream(cfg.seed, &[chain as u64]);
    let dim = target.dim();
    let mut current = initial_point(target, init, cfg.init_radius, &mut rng)?;
    let mut h = Hamiltonian { target, inv_mass: vec![1.0; dim], step: 1.0 };
    initial_step(&mut h, &current, &mut rng);
    let mut da = DualAveraging::new(h.step, cfg.target_accept);

    let n_warmup = cfg.warmup().min(cfg.n_iterations);
    let windows = adaptation_windows(n_warmup);
    let mut window_idx = 0;
    let mut welford = Welford::new(dim);

    let mut out = ChainOutput {
        draws: Vec::with_capacity(cfg.n_iterations - n_warmup),
        log_density: Vec::with_capacity(cfg.n_iterations - n_warmup),
        divergences: 0,
        warmup_divergences: 0,
        step_size: 0.0,
        inv_mass: Vec::new(),
        mean_accept: 0.0,
        mean_tree_depth: 0.0,
        n_leapfrog: 0,
    };
    let mut accept_sum = 0.0;
    let mut depth_sum = 0.0;

    for it in 0..cfg.n_iterations {
        let tr = transition(&h, &current, cfg.max_tree_depth, &mut rng);
        current = tr.point;
        out.n_leapfrog += tr.n_leapfrog;
        if it < n_warmup {
            if tr.divergent {
                out.warmup_divergences += 1;
            }
            h.step = da.update(tr.accept);
            if let Some(&(start, end)) = windows.get(window_idx) {
                if it >= start && it < end {
                    welford.push(&current.q);
                }
                if it + 1 == end {
                    h.inv_mass = welford.regularized_variance();
                    welford = Welford::new(dim);
                    window_idx += 1;
                    initial_step(&mut h, &current, &mut rng);
                    da = DualAveraging::new(h.step, cfg.target_accept);
                }
            }
            if it + 1 == n_warmup {
                h.step = da.final_step();
            }
        } else {
            if tr.divergent {
                out.divergences += 1;
            }
            accept_sum += tr.accept;
            depth_sum += tr.depth as f64;
            out.draws.push(current.q.clone());
            out.log_density.push(current.lp);
        }
    }
    let n_draws = out.draws.len().max(1) as f64;
    out.mean_accept = accept_sum / n_draws;
    out.mean_tree_depth = depth_sum / n_draws;
    out.step_size = h.step;
    out.inv_mass = h.inv_mass;
    Ok(out)
}

struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self { n: 0.0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1.0;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / self.n;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    /// Sample variance shrunk toward 1e-3.
    fn regularized_variance(&self) -> Vec<f64> {
        let n = self.n;
        self.m2
            .iter()
            .map(|m2| {
                let var = if n > 1.0 { m2 / (n - 1.0) } else { 1.0 };
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

/// Runs `cfg.n_chains` independent chains in parallel, each with its own
/// random stream; output is ordered by chain index.
pub fn hmc_sample<T: LogDensity + ?Sized>(
    target: &T,
    init: Option<&[f64]>,
    cfg: &SamplerConfig,
) -> Result<Vec<ChainOutput>, InferenceError> {
    if cfg.n_chains == 0 {
        return Err(InferenceError::InvalidConfig("n_chains must be at least 1".into()));
    }
    if cfg.n_iterations <= cfg.warmup() {
        return Err(InferenceError::InvalidConfig("n_iterations must exceed the warmup length".into()));
    }
    if let Some(i) = init {
        if i.len() != target.dim() {
            return Err(InferenceError::InvalidConfig(format!(
                "initial point has dimension {}, target has {}",
                i.len(),
                target.dim()
            )));
        }
    }
    (0..cfg.n_chains).into_par_iter().map(|c| run_chain(target, init, cfg, c)).collect()
}
