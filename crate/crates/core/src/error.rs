use thiserror::Error;

/// Errors raised by the reduced-order modeling toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("Newton iteration did not converge after {iterations} iterations (residual norm {residual_norm:e})")]
    NewtonDiverged {
        iterations: usize,
        residual_norm: f64,
    },

    #[error("singular linear system in {0}")]
    SingularSystem(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("interpolation point selection failed at step {step}: {reason}")]
    SelectionFailed { step: usize, reason: String },

    #[error("singular interpolation matrix (condition number {condition:e})")]
    SingularInterpolation { condition: f64 },

    #[error("time step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// Strips any time-step annotations and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
