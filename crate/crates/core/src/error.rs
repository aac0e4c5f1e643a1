use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent shapes, missing fields or out-of-range parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite value showed up where a finite one was required.
    #[error("numeric error in `{term}`: {detail}")]
    Numeric { term: String, detail: String },

    /// A training phase diverged or was otherwise aborted.
    #[error("phase `{phase}` aborted at iteration {iteration}: {reason}")]
    PhaseAbort {
        phase: String,
        iteration: usize,
        reason: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid json in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(term: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            term: term.into(),
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes the phase name onto numeric and abort errors.
    pub fn in_phase(self, phase: &str) -> Self {
        match self {
            Error::Numeric { term, detail } => Error::Numeric {
                term: format!("{phase}/{term}"),
                detail,
            },
            other => other,
        }
    }
}
