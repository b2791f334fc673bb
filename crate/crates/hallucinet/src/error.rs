//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by generation, training, evaluation, and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A required input file or directory does not exist.
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Invalid or unparseable configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed file contents (bad magic, truncated data, version skew).
    #[error("format error: {0}")]
    Format(String),

    /// Tensor or model shape mismatch.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Non-finite value where a finite one is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Refusing to overwrite existing outputs without --overwrite.
    #[error("output already exists (pass --overwrite to replace): {0}")]
    AlreadyExists(PathBuf),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for missing inputs, 3 for config parse errors,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingFile(_) => 2,
            Error::Config(_) => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
