use std::path::PathBuf;

use hypergrid::Error as CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    MissingInput(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> CliError {
        CliError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 config or usage error, 2 missing input, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::MissingInput(_) => 2,
            CliError::Io { source, .. } => {
                if source.kind() == std::io::ErrorKind::NotFound {
                    2
                } else {
                    1
                }
            }
            CliError::Core(e) => match e {
                CoreError::MissingExtraction(_) => 2,
                CoreError::NonFinite(_)
                | CoreError::TimeStepTooLarge { .. }
                | CoreError::BlowUp { .. }
                | CoreError::SolveDiverged { .. }
                | CoreError::NotYoungMeasure { .. } => 3,
                _ => 1,
            },
        }
    }
}
