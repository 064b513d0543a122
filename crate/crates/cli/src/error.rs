//! CLI error type: configuration problems carry enough context to fix the
//! config in one edit; engine failures pass through the library error.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("missing required config keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error("engine error: {0}")]
    Engine(#[from] cavity_tempo::error::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} sweep entries failed")]
    SweepFailures { failed: usize, total: usize },
}
