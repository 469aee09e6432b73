use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rkrd::Error),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: rkrd::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report: {0}")]
    Report(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}
