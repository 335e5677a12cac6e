//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A path grid is too coarse for the requested transform depth.
    #[error("insufficient grid resolution: need level >= {required}, got {actual}")]
    InsufficientResolution { required: u32, actual: u32 },

    /// A sample set has fewer distinct values than requested codepoints.
    #[error("degenerate samples: {distinct} distinct values < codebook size {requested}")]
    DegenerateSamples { distinct: usize, requested: usize },

    /// Cost guard of the exact dynamic-programming trainer.
    #[error("size guard: {0}")]
    SizeGuard(String),

    /// Invalid process or quantizer parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quantizer budget is too small to be split or allocated.
    #[error("budget too small: {0}")]
    BudgetTooSmall(String),

    /// A rate fit was attempted with too few curve points.
    #[error("insufficient points: need at least {required}, got {actual}")]
    InsufficientPoints { required: usize, actual: usize },

    /// Exact fractional-Brownian covariance embedding failed.
    #[error("circulant embedding not nonnegative definite and grid too large for Cholesky fallback (level {0})")]
    EmbeddingFailed(u32),

    /// Configuration file rejected; the message names the offending key.
    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
