//! Error type shared by all numeric modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The kernel constructor's impulse-response self-check failed. This
    /// indicates an internal inconsistency between the closed-form
    /// coefficients and the averaged one-sided sums, never user error.
    #[error(
        "two-sided kernel self-check failed at coefficient {index}: \
         closed form {closed:.17e} vs impulse response {oracle:.17e}"
    )]
    KernelMismatch {
        index: usize,
        closed: f64,
        oracle: f64,
    },

    /// Two grids that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A solver update produced a NaN or infinity.
    #[error("non-finite value at pixel ({x}, {y}) on step {step}")]
    NonFinite { x: usize, y: usize, step: usize },
}

pub type Result<T> = std::result::Result<T, CoreError>;
