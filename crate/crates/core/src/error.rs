use thiserror::Error;

/// Errors raised by the graded algebra engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid degree bit {0}; degrees are tuples of 0/1")]
    InvalidDegreeBit(i64),

    #[error("invalid sign table entry {value} at ({row}, {col}); entries must be +1 or -1")]
    InvalidSign { row: usize, col: usize, value: i64 },

    #[error("sign table is not symmetric at ({0}, {1})")]
    AsymmetricSignTable(usize, usize),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("operands live in different domains")]
    DomainMismatch,

    #[error("invalid monomial: {0}")]
    InvalidMonomial(String),

    #[error("not invertible: {0}")]
    NotInvertible(String),

    #[error("truncation order {requested} exceeds domain order {max}")]
    TruncationOrder { requested: u32, max: u32 },

    #[error("degree mismatch for `{coordinate}`: {detail}")]
    DegreeMismatch { coordinate: String, detail: String },

    #[error("base map leaves the target box at sample {point}")]
    RangeViolation { point: String },

    #[error("transition {from} -> {to} is missing")]
    MissingTransition { from: String, to: String },

    #[error("invalid atlas: {0}")]
    InvalidAtlas(String),

    #[error("empty overlap for charts ({0}, {1}, {2})")]
    EmptyOverlap(String, String, String),

    #[error("product of `{left}` and `{right}` has overlapping supports")]
    NonDisjointSupport { left: String, right: String },

    #[error("not invertible at sample {point}: {what}")]
    SingularAtSample { point: String, what: String },

    #[error("invalid bundle data: {0}")]
    InvalidBundle(String),

    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),

    #[error("square of generator `{0}` is not determined by the relations")]
    UndeterminedSquare(String),

    #[error("product of `{left}` and `{right}` is not homogeneous")]
    InhomogeneousProduct { left: String, right: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
