use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const CONVERGENCE: i32 = 4;
    pub const DOMAIN: i32 = 5;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: missing column(s) {missing:?}; header has {found:?}")]
    Schema {
        path: PathBuf,
        missing: Vec<String>,
        found: Vec<String>,
    },
    #[error("{0}")]
    Convergence(String),
    #[error(transparent)]
    Core(#[from] gbtail_core::Error),
    #[error("{0}")]
    Domain(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => exit::IO,
            Error::Usage(_) => exit::USAGE,
            Error::Parse { .. } | Error::Schema { .. } => exit::PARSE,
            Error::Convergence(_) => exit::CONVERGENCE,
            Error::Core(gbtail_core::Error::Config(_)) => exit::USAGE,
            Error::Core(_) | Error::Domain(_) => exit::DOMAIN,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
