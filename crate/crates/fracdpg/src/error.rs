//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FracDpgError {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Matrix/vector dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A Theta block failed its Cholesky factorization. This signals an
    /// assembly bug, not a user error.
    #[error("test Gram block for element {element} is not SPD")]
    NonSpdBlock { element: usize },

    /// The normal-equation matrix is (numerically) singular; the discrete
    /// test space is too small for the trial space.
    #[error("discrete inf-sup failure: normal equations are singular (test degrees too small?)")]
    DiscreteInfSupFailure,

    /// An error quantity was requested but the problem has no exact solution.
    #[error("no exact solution bundle available for this problem")]
    MissingExactBundle,

    /// A convergence-loop step failed.
    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<FracDpgError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FracDpgError {
    pub fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        FracDpgError::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}
