use thiserror::Error;

/// Everything that can go wrong while building, repairing or storing codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("matrix is singular")]
    Singular,

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("element {value} is not below the field order {order}")]
    ElementOutOfRange { value: u32, order: u32 },

    #[error("field of order {order} is too small, need at least {needed} distinct points")]
    FieldTooSmall { needed: usize, order: u32 },

    #[error("duplicate or overlapping evaluation point {0}")]
    DuplicatePoint(u32),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("piggyback on substripe {substripe} references coefficient {coord} outside earlier instances")]
    NotTriangular { substripe: usize, coord: usize },

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("need at least {needed} symbols, got {got}")]
    TooFewSymbols { needed: usize, got: usize },

    #[error("duplicate node {0}")]
    DuplicateNode(usize),

    #[error("{count} subsets exceed the exhaustive-check bound {bound}")]
    CombinatorialBound { count: u128, bound: u128 },

    #[error("repair plan for node {node} does not span the lost symbols")]
    PlanInvalid { node: usize },

    #[error("lemma precondition failed: {0}")]
    LemmaPrecondition(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("integrity failure: {0}")]
    Integrity(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }

    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Process exit status: 2 bad parameters, 3 not enough data, 4 integrity, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 1,
            Error::Insufficient(_) | Error::TooFewSymbols { .. } => 3,
            Error::Integrity(_) | Error::Format(_) => 4,
            _ => 2,
        }
    }
}
