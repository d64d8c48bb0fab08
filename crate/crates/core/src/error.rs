use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the embedding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: rejected record (label {label:?}, frame {frame}): {reason}")]
    Rejected { line: usize, label: String, frame: usize, reason: String },

    #[error("no instances")]
    Empty,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate vector: {0}")]
    DegenerateVector(String),

    #[error("degenerate frequency: label {0} never occurs")]
    DegenerateFrequency(usize),

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier, used by the CLI for machine-parsable errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Rejected { .. } => "rejected",
            Error::Empty => "empty",
            Error::Config(_) => "config",
            Error::Index(_) => "index",
            Error::Domain(_) => "domain",
            Error::DegenerateVector(_) => "degenerate-vector",
            Error::DegenerateFrequency(_) => "degenerate-frequency",
            Error::Training { .. } => "training",
            Error::Eval(_) => "eval",
            Error::Format { .. } => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
