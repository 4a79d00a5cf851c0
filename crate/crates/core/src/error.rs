use std::path::PathBuf;

use thiserror::Error;

use crate::scenario::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value is non-finite or a coordinate lies outside the domain of a state.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two fields (or a field and a grid/spec) do not have compatible layouts.
    #[error("shape error: {0}")]
    Shape(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("path error: {0}")]
    Path(String),

    /// The grid does not capture the support of the states at some time.
    #[error("truncation error at t = {time}: {detail}")]
    Truncation { time: f64, detail: String },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}
