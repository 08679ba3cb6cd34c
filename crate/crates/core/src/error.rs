use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("label `{0}` occurs more than once")]
    DuplicateLabel(String),

    #[error("system `{name}` has dimension {dim}; dimensions must be at least 1")]
    BadDimension { name: String, dim: usize },

    #[error("comb{n} expects {expected} labels, got {got}")]
    CombArity {
        n: usize,
        expected: usize,
        got: usize,
    },

    #[error("a comb needs at least one tooth")]
    EmptyComb,

    #[error("operands share labels: {0:?}")]
    LabelClash(Vec<String>),

    #[error("intersection operands live on different spaces")]
    SpaceMismatch,

    #[error("intersection operands have different normalisation constants ({0} vs {1})")]
    LambdaMismatch(String, String),

    #[error("type has {0} non-trivial factors; at most {max} are supported", max = crate::signature::MAX_FACTORS)]
    TooManyFactors(usize),

    #[error("total dimension overflows")]
    DimensionOverflow,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("bit string keys do not match the operator factors")]
    KeyMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("size limit exceeded: m + n = {got} > {limit}")]
    SizeLimit { got: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed matrix data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
