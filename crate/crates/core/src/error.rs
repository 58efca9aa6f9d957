use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sampling design error: {0}")]
    Design(String),

    #[error("parameter outside its domain: {0}")]
    Domain(String),

    #[error("chain diverged at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("every replicate of scenario `{scenario}` failed; first failure: {first}")]
    ScenarioFailed { scenario: String, first: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
