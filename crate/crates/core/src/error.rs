use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("tensor has {values} values but shape {shape:?} requires {expected}")]
    BadLength {
        shape: Vec<usize>,
        values: usize,
        expected: usize,
    },
    #[error("log of non-positive value {value} at index {index}")]
    LogDomain { index: usize, value: f64 },
    #[error("division by zero at index {index}")]
    DivisionByZero { index: usize },
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("tensors belong to different tapes")]
    TapeMismatch,
    #[error("backward requires a scalar root, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("backward requires a tape-attached root")]
    DetachedRoot,
    #[error("non-finite value {value} at {context}")]
    NonFinite { context: String, value: f64 },
    #[error("step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("more columns than rows: {cols} targets cannot be matched to {rows} slots")]
    MoreTargetsThanSlots { rows: usize, cols: usize },
    #[error("enumeration limited to {limit} rows, got {rows}")]
    TooLargeForEnumeration { rows: usize, limit: usize },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("class label {label} out of range for {num_classes} object classes")]
    ClassOutOfRange { label: usize, num_classes: usize },
    #[error("degenerate box {0:?}: width and height must be positive")]
    DegenerateBox([f64; 4]),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite loss at step {step}; offending batch:\n{dump}")]
    NonFiniteLoss { step: usize, dump: String },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
