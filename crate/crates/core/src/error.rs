use thiserror::Error;

/// Errors shared across the crate. Each variant names the contract that was
/// violated rather than the call site.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("shape mismatch: {context} (got {rows}x{cols})")]
    ShapeMismatch {
        context: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is not Hermitian: |M - M*| = {defect:.3e} exceeds tolerance {tol:.3e}")]
    NonHermitian { defect: f64, tol: f64 },

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix does not have full column rank (sigma_min/sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("matrix is singular: {context}")]
    Singular { context: &'static str },

    #[error("matrix is not idempotent: |Q^2 - Q| = {residual:.3e}")]
    NotIdempotent { residual: f64 },

    #[error("operator is not an A-isometry: |T*AT - A|/|A| = {defect:.3e}")]
    NotIsometric { defect: f64 },

    #[error("projections too far apart: |P - P0| = {distance:.3e} (local section needs < 1)")]
    TooFar { distance: f64 },

    #[error("conjugator does not intertwine the final projections: residual {residual:.3e}")]
    ProjectionMismatch { residual: f64 },

    #[error("Gram operator 1 - X_m P X_m is not positive definite at m = {m:.3e}")]
    GramNotPd { m: f64 },

    #[error("matrix is not tangent at the base isometry: residual {residual:.3e}")]
    NotTangent { residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
