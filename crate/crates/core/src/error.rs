use thiserror::Error;

use crate::interval::IntervalKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("algebra mismatch: {left:?} vs {right:?}")]
    AlgebraMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("element is not hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("element is not positive (smallest eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("element is not invertible (smallest |eigenvalue| {0:e})")]
    Singular(f64),

    #[error("function undefined at eigenvalue {0}")]
    FunctionUndefined(f64),

    #[error("not a projection (idempotence defect {0:e})")]
    NotProjection(f64),

    #[error("element lies outside the {0} interval")]
    OutsideInterval(IntervalKind),

    #[error("interval mismatch: expected {expected}, found {found}")]
    IntervalMismatch {
        expected: IntervalKind,
        found: IntervalKind,
    },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{certificate} certificate failed: residual {residual:e} exceeds {budget:e}")]
    Certificate {
        certificate: String,
        residual: f64,
        budget: f64,
    },

    #[error("map callback failed: {0}")]
    Callback(String),

    #[error("unknown suite {0:?}")]
    UnknownSuite(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn certificate(name: impl Into<String>, residual: f64, budget: f64) -> Self {
        Error::Certificate {
            certificate: name.into(),
            residual,
            budget,
        }
    }
}
