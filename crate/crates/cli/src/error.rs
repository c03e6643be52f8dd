use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("country {0:?} not found in the data file")]
    CountryNotFound(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("non-numeric cell at line {line}, column {column}: {value:?}")]
    NonNumericCell {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("missing day between {before} and {after}")]
    MissingDay { before: String, after: String },
    #[error("no data on or before the cutoff {0}")]
    NothingBeforeCutoff(String),
    #[error("plot needs at least one model forecast")]
    NoForecasts,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] epicast_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
