use alloc::string::String;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("column {column} of the design is degenerate (zero norm)")]
    DegenerateColumn { column: usize },
    #[error("design column {column} has squared norm {norm_sq}, expected n = {n}")]
    UnnormalizedColumn { column: usize, norm_sq: f64, n: usize },
    #[error("coordinate descent did not converge after {cycles} cycles (best KKT residual {best_residual:e})")]
    NotConverged { cycles: usize, best_residual: f64 },
    #[error("Cholesky factorization failed on a {size}x{size} Gram matrix")]
    Factorization { size: usize },
    #[error("operation requires a nonempty support")]
    EmptySupport,
    #[error("noise vector is not available for this instance")]
    NoiseUnavailable,
    #[error("empty input: {0}")]
    EmptyInput(String),
}

pub type Result<T> = core::result::Result<T, Error>;
