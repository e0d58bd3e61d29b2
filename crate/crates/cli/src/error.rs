use std::path::PathBuf;

use carnot_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("config file {path}, line {line}: {message}")]
    ConfigLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: CoreError },

    #[error("solver: {0}")]
    Solver(String),

    #[error("checks failed: {0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::ConfigLine { .. } => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Write { .. } => EXIT_IO,
            CliError::ChecksFailed(_) => EXIT_CHECK_FAILED,
            CliError::Core(e) => match e {
                CoreError::NonConvergence { .. }
                | CoreError::DegenerateGradient { .. }
                | CoreError::DegenerateFit(_) => EXIT_SOLVER,
                CoreError::Io(_) | CoreError::Json(_) => EXIT_IO,
                CoreError::Csv(c) if c.is_io_error() => EXIT_IO,
                _ => EXIT_CONFIG,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn config<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}
