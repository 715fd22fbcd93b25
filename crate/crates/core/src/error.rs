use std::path::PathBuf;
use thiserror::Error;

/// Errors shared by the model, noise, reconstruction and theory modules.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty graph: {0}")]
    EmptyGraph(&'static str),

    #[error("agent index {agent} out of range for n = {n}")]
    AgentOutOfRange { agent: usize, n: usize },

    #[error("dense design matrix needs {needed} bytes, budget is {budget} bytes")]
    ResourceLimit { needed: usize, budget: usize },

    #[error("iteration diverged to a non-finite value at t = {iteration}")]
    Diverged { iteration: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error{}: {source}", path_suffix(.path))]
    Io {
        source: std::io::Error,
        path: Option<PathBuf>,
    },
}

fn path_suffix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!(" at {}", p.display()),
        None => String::new(),
    }
}

impl From<std::io::Error> for CoreError {
    fn from(source: std::io::Error) -> Self {
        CoreError::Io { source, path: None }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
