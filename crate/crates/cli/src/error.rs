use std::path::PathBuf;

use thiserror::Error;

/// Failure of a CLI run, split by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid configuration, inconsistent
    /// inputs. Exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Failures while running a valid configuration. Exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Runtime(_) => 2,
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::Runtime(format!("{}: {err}", path.display()))
    }

    pub fn read(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Self::Usage(format!("{}: {err}", path.display()))
    }
}

impl From<gcause::Error> for CliError {
    fn from(err: gcause::Error) -> Self {
        use gcause::Error as E;
        match err {
            E::Config(_)
            | E::InvalidPartition(_)
            | E::PartitionMismatch
            | E::TooFewWindows(_)
            | E::WindowTooLong { .. }
            | E::EmptyFile { .. }
            | E::RaggedRow { .. }
            | E::BadCell { .. }
            | E::InvalidSeries(_)
            | E::ConstantVariable { .. }
            | E::Csv(_) => Self::Usage(err.to_string()),
            _ => Self::Runtime(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a path to an error raised while writing an artifact.
pub(crate) fn write_file(path: PathBuf, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}
