use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fleet_sp::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: CoreError },

    #[error(transparent)]
    Core(#[from] CoreError),

    /// Every SAA replication failed.
    #[error("solver: {0}")]
    Solver(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(CoreError::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 4,
            CliError::File { source, .. } | CliError::Core(source) => match source {
                CoreError::InvalidInput(_) | CoreError::Dimension(_) => 2,
                CoreError::Io(_) | CoreError::Csv(_) | CoreError::MissingColumn(_) | CoreError::Format(_) => 3,
                CoreError::Numeric(_) | CoreError::Infeasible(_) => 4,
            },
        }
    }
}

/// Attaches the offending path to a core error.
pub trait WithPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T, E: Into<CoreError>> WithPath<T> for Result<T, E> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::File {
            path: path.to_path_buf(),
            source: e.into(),
        })
    }
}
