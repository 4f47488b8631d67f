use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// The configuration cannot be simulated.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Model(#[from] wsmac_core::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn config_err(msg: impl Into<String>) -> SimError {
    SimError::InvalidConfig(msg.into())
}
