use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record at line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },

    #[error("sequence `{id}`: timestamps not ascending at index {index}")]
    TimesNotAscending { id: String, index: usize },

    #[error("sequence `{id}`: code {code} out of vocabulary for feature `{feature}` (valid range 1..{vocab_size})")]
    CodeOutOfVocab {
        id: String,
        feature: String,
        code: u32,
        vocab_size: u32,
    },

    #[error("sequence `{id}`: {msg}")]
    InvalidSequence { id: String, msg: String },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid split ratios ({0}, {1}, {2}): must be positive and sum to 1")]
    InvalidRatios(f64, f64, f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("probe error: {0}")]
    Probe(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
