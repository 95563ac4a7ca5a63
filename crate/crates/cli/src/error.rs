use std::path::PathBuf;

use coreg_core::Error as CoreError;

/// Failures of a CLI invocation, each tied to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{0}")]
    Failed(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn input(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Input {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for assumption or convergence failures, 2 for bad input, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Failed(_) => 1,
            Self::Input { .. } => 2,
            Self::Io { .. } => 3,
            Self::Core(e) => match e {
                CoreError::AssumptionViolation(_)
                | CoreError::Precondition(_)
                | CoreError::RegulatorUnsolvable { .. }
                | CoreError::Unstabilizable(_)
                | CoreError::EmptyInterval(_)
                | CoreError::NoConvergence(_)
                | CoreError::Diverged { .. }
                | CoreError::Singular { .. } => 1,
                CoreError::Dimension(_) | CoreError::NonFinite(_) | CoreError::Domain(_) => 2,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
