use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("special function domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Special(#[from] SpecialError),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("distance projection did not converge after {iterations} iterations at ({x:.6e}, {y:.6e}, {z:.6e}): residual {residual:.3e}")]
    Projection { iterations: usize, x: f64, y: f64, z: f64, residual: f64 },

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite loss at collocation point {index}")]
    NonFinite { index: usize },

    #[error("optimizer diverged at iteration {iteration}: loss {loss:.3e}")]
    Diverged { iteration: usize, loss: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("reference solve failed: boundary residual {residual:.3e} exceeds {limit:.1e}")]
    OracleAccuracy { residual: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Configuration-class errors map to exit code 2, numerical ones to 3.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Construction(_) | Error::Dimension { .. } | Error::Checkpoint(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
