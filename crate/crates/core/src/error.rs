use std::path::{Path, PathBuf};

use crate::dsl::DslError;
use crate::llm::LlmError;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("geometry error in segment {id}: {msg}")]
    Geometry { id: usize, msg: String },
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("image error: {0}")]
    Image(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
