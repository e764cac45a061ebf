use std::path::PathBuf;

use qfft_core::ErrorKind;
use thiserror::Error;

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Bad arguments, malformed files or inputs that fail validation.
pub const EXIT_VALIDATION: i32 = 2;
/// Numerical failure on valid inputs.
pub const EXIT_NUMERICAL: i32 = 3;
/// Filesystem failure.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] qfft_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(e) => match e.kind() {
                ErrorKind::Validation => EXIT_VALIDATION,
                ErrorKind::Numerical => EXIT_NUMERICAL,
            },
            AppError::Io { .. } => EXIT_IO,
            AppError::Parse { .. } | AppError::Usage(_) => EXIT_VALIDATION,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn usage(message: impl Into<String>) -> Self {
        AppError::Usage(message.into())
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
