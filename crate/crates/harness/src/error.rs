use pooled_core::CoreError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o failure at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("query cap hit on every grid point")]
    AllCapped,
    #[error("transition window: {0}")]
    Window(String),
    #[error("oracle decomposition check failed: {0}")]
    OracleCheck(String),
}

impl HarnessError {
    /// Process exit code: 1 bad configuration, 2 I/O, 3 every grid point
    /// capped.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::Core(_)
            | HarnessError::Window(_)
            | HarnessError::OracleCheck(_) => 1,
            HarnessError::Io { .. } => 2,
            HarnessError::AllCapped => 3,
        }
    }
}

pub fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
