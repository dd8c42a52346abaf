use thiserror::Error;

use crate::relation::Side;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("model index {index} out of range for a side of size {size}")]
    ModelIndexOutOfRange { index: usize, size: usize },

    #[error("duplicate model index {0}")]
    DuplicateModelIndex(usize),

    #[error("model set for {0} is empty")]
    EmptyModel(&'static str),

    #[error("non-binary matrix entry {entry:?} at row {row}, column {col}")]
    NonBinaryEntry { row: usize, col: usize, entry: String },

    #[error("formula atom {atom} is not a model parameter on the {side:?} side")]
    AtomOutsideModel { atom: usize, side: Side },

    #[error("element {index} out of range (size {size})")]
    ElementOutOfRange { index: usize, size: usize },

    #[error("type is not a member of the given type space")]
    TypeNotInSpace,

    #[error("unknown type id {0}")]
    UnknownType(usize),

    #[error("type {0} has no computed definition")]
    DefinitionMissing(usize),

    #[error("undefinable types block evaluation: {0:?}")]
    Undefinable(Vec<(Side, usize)>),

    #[error("negative weight for type {0}")]
    NegativeWeight(usize),

    #[error("weights sum to {0}, expected 1")]
    WeightSum(String),

    #[error("an average needs at least one element")]
    EmptyAverage,

    #[error("formula and measure live over different models or sides")]
    ModelMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("type {0} in the support has no realizer")]
    NoRealizer(usize),

    #[error("approximation failed after {attempts} attempts; best deviation {best}")]
    ApproximationExhausted { attempts: usize, best: String },

    #[error("tuple length {got} does not match theta arity {expected}")]
    TupleLength { expected: usize, got: usize },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
