use thiserror::Error;

/// Errors produced by the objectives, engine and theory modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Power iteration ran out of iterations; `last_estimate` is the final
    /// Rayleigh quotient and `last_iterate` the final unit vector.
    #[error("power iteration did not converge after {iterations} iterations (estimate {last_estimate})")]
    PowerIteration {
        iterations: usize,
        last_estimate: f64,
        last_iterate: Vec<f64>,
    },

    /// The reference solver hit its iteration cap; `partial` holds the last
    /// iterate so callers can decide whether to accept it.
    #[error("reference solve stopped after {iterations} iterations with gradient norm {residual:e} (requested {tol:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        tol: f64,
        partial: Box<crate::objectives::ReferenceSolution>,
    },

    #[error("non-finite value at step {step}")]
    Divergence { step: usize },

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
