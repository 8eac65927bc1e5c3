use thiserror::Error;

/// Crate-level error; each module has its own variant set.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] crate::tsdata::DataError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Gp(#[from] crate::gp::GpError),
    #[error(transparent)]
    Inference(#[from] crate::inference::InferenceError),
    #[error(transparent)]
    Derived(#[from] crate::derived::DerivedError),
    #[error(transparent)]
    Experiment(#[from] crate::experiments::ExperimentError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
