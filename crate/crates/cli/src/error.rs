use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] svm_heuristics::Error),

    #[error("invalid config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("path {path} does not exist (dataset `{name}`)")]
    MissingPath { name: String, path: PathBuf },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Config { .. } => "E_CONFIG",
            CliError::MissingPath { .. } => "E_MISSING_PATH",
            CliError::Write { .. } => "E_WRITE",
            CliError::Usage(_) => "E_USAGE",
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
