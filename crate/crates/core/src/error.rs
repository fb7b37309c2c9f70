use thiserror::Error;

/// Errors raised by the solvers and sweep drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    /// Inputs for which the answer is not unique.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A position outside the box was requested.
    #[error("position {x} outside box [-{half}, {half}]")]
    Domain { x: f64, half: f64 },

    /// The objective produced a non-finite value inside a Markov chain.
    #[error("chain error at proposal {step}: objective returned {value} (index {index}, delta {delta})")]
    NonFinite {
        step: u64,
        index: usize,
        delta: f64,
        value: f64,
    },

    /// A scan found no parameter satisfying its criterion.
    #[error("not found: {0}")]
    NotFound(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
