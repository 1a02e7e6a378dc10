//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by solver construction, assembly, and integration.
#[derive(Debug, Error)]
pub enum PdaeError {
    /// Two fields or operators were built on different meshes.
    #[error("grid mismatch: {context}")]
    GridMismatch { context: String },

    /// A mesh is too coarse for the requested operator.
    #[error("grid too small: {context} needs at least {min} cells, got {got}")]
    GridTooSmall {
        context: &'static str,
        min: usize,
        got: usize,
    },

    /// An input carried a NaN or infinity.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// A scalar argument was outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// The symmetric eigensolver did not converge or produced an
    /// inadmissible spectrum.
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    /// A time step produced non-finite values; treated as blow-up
    /// evidence by the integrator.
    #[error("state overflowed at t = {t}")]
    Overflow { t: f64 },

    /// Picard iteration exhausted its budget without contracting.
    #[error("fixed-point iteration did not contract: defect {last_defect:.3e} after {iters} iterations")]
    NonContraction {
        iters: usize,
        last_defect: f64,
        defect_history: Vec<f64>,
    },

    /// Configuration file could not be read or failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PdaeError>;
