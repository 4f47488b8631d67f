use std::fmt::Display;

use thiserror::Error;

/// Command failure, split by exit code.
#[derive(Debug, Error)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input. Exit code 2.
    #[error("{0:#}")]
    Input(anyhow::Error),
    /// A result broke an invariant the tool guarantees. Exit code 3.
    #[error("internal invariant violated: {0:#}")]
    Internal(anyhow::Error),
}

impl Failure {
    pub fn input(msg: impl Display) -> Self {
        Failure::Input(anyhow::anyhow!("{msg}"))
    }

    pub fn internal(msg: impl Display) -> Self {
        Failure::Internal(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

pub type CmdResult<T> = Result<T, Failure>;

/// Tags any error as an input error with context.
pub trait InputContext<T> {
    fn input(self, what: impl Display) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> InputContext<T> for Result<T, E> {
    fn input(self, what: impl Display) -> CmdResult<T> {
        self.map_err(|e| Failure::Input(e.into().context(what.to_string())))
    }
}
