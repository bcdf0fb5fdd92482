use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("{what} did not converge")]
    NoConvergence { what: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("alpha = {alpha} outside the legal range {legal}")]
    BadAlpha { alpha: f64, legal: &'static str },

    #[error("degenerate random sample: {what}")]
    DegenerateSample { what: String },

    #[error("support violation: {detail}")]
    SupportViolation { detail: String },

    #[error("solver failure: {detail}")]
    SolverFailure { detail: String },

    #[error("could not complete the isometry to a unitary")]
    CompletionFailure,

    #[error("invalid input: {detail}")]
    InvalidInput { detail: String },

    /// A measure evaluated below the clamping window; indicates a numerical
    /// defect rather than bad input.
    #[error("measure evaluated to {value:.3e}, below the clamping window")]
    NegativeValue { value: f64 },
}

pub type Result<T> = std::result::Result<T, CoherenceError>;

impl CoherenceError {
    pub fn invalid(detail: impl Into<String>) -> Self {
        CoherenceError::InvalidInput {
            detail: detail.into(),
        }
    }
}
