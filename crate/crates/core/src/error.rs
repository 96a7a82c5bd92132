use thiserror::Error;

/// Errors raised by set operations, map evaluation and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("invalid convex set: {0}")]
    InvalidSet(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("polytope projection did not converge within {iterations} iterations")]
    ProjectionDidNotConverge { iterations: usize },

    #[error("unsupported dimension {0} for this operation")]
    UnsupportedDimension(usize),

    #[error("points must differ for a pair check")]
    CoincidentPoints,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("adaptive step stalled after {halvings} halvings")]
    Stall { halvings: usize },

    #[error("no sign change on [{a}, {b}] and no endpoint solves the inclusion")]
    Bracket { a: f64, b: f64 },

    #[error("trace did not converge")]
    NotConverged,

    #[error("malformed data: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
