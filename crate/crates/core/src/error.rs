use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural problem in an input document (header, column count, token).
    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    /// A cell or argument that is missing, non-finite or out of range.
    #[error("value error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Value { row: Option<usize>, message: String },

    #[error("label error: {0}")]
    Label(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("shape error: expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn value(row: Option<usize>, message: impl Into<String>) -> Self {
        Error::Value {
            row,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
