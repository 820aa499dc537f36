use thiserror::Error;

/// Failures of a command, split by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or parameters; exit status 2.
    #[error("usage: {0}")]
    Usage(String),
    /// Invalid input data or a failed solve; exit status 1.
    #[error(transparent)]
    Solver(#[from] sparse_lqr::Error),
    /// A problem or matrix file could not be read or parsed.
    #[error("{path}: {source}")]
    Input {
        path: String,
        source: sparse_lqr::Error,
    },
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
