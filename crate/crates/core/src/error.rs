use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: String,
        found: String,
    },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("columns are not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("operator is not a contraction (norm {norm})")]
    NotContraction { norm: f64 },

    #[error("map is not trace non-increasing (largest eigenvalue of sum K^dag K is {max_eigenvalue})")]
    NotTraceNonIncreasing { max_eigenvalue: f64 },

    #[error("{what} is not proportional to the identity (deviation {deviation:.3e})")]
    NotProportional { what: String, deviation: f64 },

    #[error("precondition unmet: {0}")]
    Precondition(String),

    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("singular matrix: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(context: &str, expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        context: context.to_string(),
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
