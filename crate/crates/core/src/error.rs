use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid boundaries: {0}")]
    InvalidBoundaries(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("flow {key} carries mixed labels ({first} and {other})")]
    MixedLabels {
        key: String,
        first: String,
        other: String,
    },
    #[error("class {0} has no flows")]
    EmptyClass(String),
    #[error("class {class} has {count} flows, fewer than k = {k}")]
    TooFewPerClass { class: String, count: usize, k: usize },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("training needs at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("number of time bins must be even for pair merging, got {0}")]
    OddBins(usize),
    #[error("packet at t={t} lies outside the update window [{lo}, {hi})")]
    PacketOutOfWindow { t: f64, lo: f64, hi: f64 },
    #[error("unknown representation kind {0:?}")]
    UnknownReprKind(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
}
