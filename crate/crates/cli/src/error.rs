//! Failure classes and their process exit codes.

use std::fmt;

use landscaper::derived::DerivedError;
use landscaper::experiments::ExperimentError;
use landscaper::inference::InferenceError;
use landscaper::sim::SimError;
use landscaper::tsdata::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// Malformed arguments, configuration or input files.
    Parse,
    /// Inputs parse but violate an operation's preconditions.
    Precondition,
    /// The sampler finished but R-hat exceeds the threshold.
    Convergence,
    Io,
    /// The sampler could not start or produced non-finite values.
    Sampler,
    /// A replayed run did not reproduce its recorded inputs or outputs.
    Mismatch,
}

impl Failure {
    pub fn exit_code(self) -> i32 {
        match self {
            Failure::Parse => 2,
            Failure::Precondition => 3,
            Failure::Convergence => 4,
            Failure::Io => 5,
            Failure::Sampler => 6,
            Failure::Mismatch => 7,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Failure,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(kind: Failure, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(Failure::Parse, message)
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Self::new(Failure::Precondition, message)
    }

    pub fn io(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        Self::new(Failure::Io, format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        let kind = match e {
            DataError::Csv { .. } | DataError::DuplicateObservation { .. } | DataError::UnknownColumn(_) => {
                Failure::Parse
            }
            DataError::Io(_) => Failure::Io,
            _ => Failure::Precondition,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        Self::precondition(e.to_string())
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        let kind = match e {
            InferenceError::Initialization { .. } | InferenceError::NonFinite { .. } => Failure::Sampler,
            _ => Failure::Precondition,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<DerivedError> for CliError {
    fn from(e: DerivedError) -> Self {
        Self::precondition(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Data(d) => d.into(),
            other => Self::precondition(other.to_string()),
        }
    }
}
