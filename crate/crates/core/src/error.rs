use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The matrix handed to a Cholesky factorization (or its Schur complement
    /// during an append) was not numerically positive definite.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("hyperparameter fitting failed: {0}")]
    Fitting(String),

    #[error("degenerate gradient (norm {0:.3e})")]
    DegenerateGradient(f64),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("closed loop is unstable (spectral radius {0:.6})")]
    Unstable(f64),

    #[error("degenerate regret normalization: f* - J(x0) = {0:.3e}")]
    DegenerateNormalization(f64),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
