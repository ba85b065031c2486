use thiserror::Error;

/// Errors produced by the multifilter library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bit position {position} out of range for length {length}")]
    OutOfRange { position: usize, length: usize },

    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unknown item id `{0}`")]
    UnknownItem(String),

    #[error("unknown item id `{0}`; a Bloom Matrix cannot grow columns, rebuild it with the new item")]
    MatrixReconstructionRequired(String),

    #[error("duplicate item id `{0}`")]
    DuplicateItem(String),

    #[error("hash range must be at least 1")]
    ZeroRange,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("label set must not be empty")]
    EmptyLabelSet,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("line {line}: duplicate item id `{item}`")]
    DuplicateItemAtLine { line: usize, item: String },

    #[error("false negative: label `{label}` missing true item `{item}`")]
    FalseNegative { label: String, item: String },

    #[error("corrupt structure file: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
