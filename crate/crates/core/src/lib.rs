//! Bayesian reconstruction of one-dimensional stochastic dynamics from
//! collections of short time series.
//!
//! The model is the Langevin equation `dx = f(x) dt + sqrt(g(x)) dW` with
//! Gaussian-process priors on the drift `f` and on the log-diffusion
//! `log g`. Transitions between consecutive observations enter through the
//! Euler-Maruyama likelihood, and the posterior is sampled with a
//! No-U-Turn Hamiltonian Monte Carlo sampler.
//!
//! Modules:
//! - [`tsdata`]: time-series collections, CSV ingestion, preprocessing.
//! - [`sim`]: reference SDEs (cusp, bimodal-unistable) and dataset generation.
//! - [`gp`]: kernels, covariance assembly, GP conditioning.
//! - [`inference`]: posterior density, sampler, diagnostics, `fit`.
//! - [`derived`]: stationary densities, potentials, stability, exit times.
//! - [`experiments`]: coverage and true-positive-rate studies.

pub mod derived;
pub mod error;
pub mod experiments;
pub mod gp;
pub mod inference;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod tsdata;

pub use error::{Error, Result};
