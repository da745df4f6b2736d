use thiserror::Error;

/// Errors raised by the library. Geometry violations found by
/// [`validate`](crate::metric::FiniteMetric::validate) are reported as data,
/// not through this type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point index {index} out of range for a space of {size} points")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("subset is empty")]
    EmptySubset,

    #[error("operation needs at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("matchings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("matching is not injective: target {0} is used twice")]
    NotInjective(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pattern has {k} points but the space only has {n}")]
    PatternTooLarge { k: usize, n: usize },

    #[error("point {0} is already in the index")]
    AlreadyActive(usize),

    #[error("point {0} is not in the index")]
    NotActive(usize),

    #[error("index is empty")]
    EmptyIndex,

    #[error("query is not a point of this space: {0}")]
    ForeignQuery(String),

    #[error("no coarse center within {radius} of center {center}")]
    NoAncestor { center: usize, radius: f64 },

    #[error("enumeration of {count} candidates exceeds the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
