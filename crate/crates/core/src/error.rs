use thiserror::Error;

/// Errors raised by the modelling and protocol layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A trace line could not be parsed.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Timestamps went backwards.
    #[error("line {line}: timestamp {value} is smaller than previous {previous}")]
    Ordering {
        line: usize,
        value: u64,
        previous: u64,
    },

    /// An argument violated an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Not enough samples to train a model.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A required label class has no members.
    #[error("{0} class empty")]
    EmptyClass(&'static str),

    /// A neighbour model needed for scheduling is missing.
    #[error("missing model for node {0}")]
    MissingModel(u32),

    /// A model file failed validation.
    #[error("model file: {0}")]
    ModelFile(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
