use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::csv_io::CsvError;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read config {path}: {reason}")]
    Config { path: PathBuf, reason: String },
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{context}: {source}")]
    Core { context: String, source: rmk_core::Error },
    #[error("fast and naive kernels disagree at N={n}: max difference {diff:e}")]
    Mismatch { n: usize, diff: f64 },
}

impl CliError {
    pub fn core(context: impl Into<String>, source: rmk_core::Error) -> Self {
        CliError::Core { context: context.into(), source }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status: 2 for usage, 3 for data, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Csv(_) | CliError::Io { .. } => EXIT_DATA,
            CliError::Core { source, .. } => match source {
                e if e.is_numerical() => EXIT_NUMERICAL,
                rmk_core::Error::InvalidParameter { .. } | rmk_core::Error::EmptyGrid => EXIT_USAGE,
                _ => EXIT_DATA,
            },
            CliError::Mismatch { .. } => EXIT_NUMERICAL,
        }
    }
}
