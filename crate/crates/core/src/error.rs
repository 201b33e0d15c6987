use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("incomplete coefficient table `{field}`: expected {expected} entries, found {found}")]
    IncompleteTable {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite coefficient in `{field}` at entry {index}")]
    NonFinite { field: String, index: usize },

    #[error("{0}")]
    AssumptionViolated(String),

    #[error("unsupported dimension {0}: only 1 and 2 are implemented")]
    UnsupportedDimension(usize),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("grid index {index} outside grid of {len} points")]
    OutsideGrid { index: usize, len: usize },

    #[error(
        "step {step} along direction {direction:?} is not aligned with grid spacing {spacing}"
    )]
    NotGridAligned {
        step: f64,
        direction: Vec<f64>,
        spacing: f64,
    },

    #[error("precondition violated at {} point(s) (first: {:?}); worst excess {worst}", points.len(), points.first())]
    PreconditionViolated { points: Vec<usize>, worst: f64 },

    #[error(
        "below threshold lambda0: certificate unavailable (lambda = {lambda}, 2*K1 = {lambda0})"
    )]
    BelowThreshold { lambda: f64, lambda0: f64 },

    #[error("too few usable rows for a fit: need {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("grid of {points} points exceeds the pair-search cap of {cap}")]
    GridTooLarge { points: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
