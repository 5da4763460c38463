use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ragged rows: row {row} has {found} cells, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },

    #[error("label column {index} out of range for {columns} columns")]
    LabelColumn { index: usize, columns: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero variance in column {column}")]
    ZeroVariance { column: usize },

    #[error("class {class} has {count} members, fewer than the {required} required")]
    Stratification { class: usize, count: usize, required: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("degenerate kernel variance (s^2 = {0:e})")]
    DegenerateKernelVariance(f64),

    #[error("unknown heuristic `{0}`")]
    UnknownHeuristic(String),
}

impl Error {
    /// Stable short code for diagnostics, e.g. `E_PARSE`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::Parse { .. } | Error::RaggedRows { .. } | Error::LabelColumn { .. } => "E_PARSE",
            Error::InvalidDataset(_) => "E_DATASET",
            Error::DimensionMismatch { .. } => "E_DIMENSION",
            Error::ZeroVariance { .. } => "E_ZERO_VARIANCE",
            Error::Stratification { .. } => "E_STRATIFICATION",
            Error::InvalidArgument(_) => "E_ARGUMENT",
            Error::Degenerate(_) | Error::DegenerateKernelVariance(_) => "E_DEGENERATE",
            Error::UnknownHeuristic(_) => "E_HEURISTIC",
        }
    }
}
