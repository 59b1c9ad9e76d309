use std::path::PathBuf;

use fsltr_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no queries")]
    NoQueries,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<CoreError>,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CoreError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CoreError::Parse { .. } | CoreError::NoQueries => "parse",
            CoreError::InvalidArgument(_) => "invalid-argument",
            CoreError::InvalidState(_) => "invalid-state",
            CoreError::Config(_) => "config",
            CoreError::Divergence(_) => "divergence",
            CoreError::File { source, .. } => source.kind(),
            CoreError::Tensor(_) => "tensor",
            CoreError::Io(_) => "io",
            CoreError::Json(_) => "json",
            CoreError::Csv(_) => "csv",
        }
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> CoreError {
        CoreError::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> CoreError {
    CoreError::InvalidArgument(msg.into())
}
