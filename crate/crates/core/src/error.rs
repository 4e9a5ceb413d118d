//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Errors raised while loading, validating or processing pipeline artefacts.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of a text artefact could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A record parsed fine but violates a domain invariant.
    #[error("validation failed: {0}")]
    Validation(String),

    /// Tensor or matrix shapes disagree.
    #[error("shape mismatch in {layer}: {message}")]
    Shape { layer: String, message: String },

    /// A numerical routine hit a degenerate input.
    #[error("{0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn shape(layer: &str, message: impl Into<String>) -> Self {
        Error::Shape {
            layer: layer.to_string(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input data (as opposed to I/O or config).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation(_) | Error::Shape { .. } | Error::Degenerate(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
