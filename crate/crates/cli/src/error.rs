use std::path::PathBuf;

use thiserror::Error;

/// Failures that stop a command before it can report pass/fail.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] progq::Error),

    #[error("could not start worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn file(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::File {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit code: 2 for bad input, 1 for failures inside a computation.
    pub fn exit_code(&self) -> i32 {
        use progq::Error as E;
        match self {
            Self::File { .. } | Self::Input(_) | Self::Pool(_) => 2,
            Self::Core(e) => match e {
                E::DimensionMismatch(_)
                | E::NotHermitian { .. }
                | E::NotUnitary { .. }
                | E::InvalidState(_)
                | E::InvalidPovm(_)
                | E::InvalidChannel(_)
                | E::InvalidArgument(_)
                | E::Unsupported(_)
                | E::Format(_)
                | E::ResourceCap(_) => 2,
                E::PathDisagreement { .. } | E::Numerical(_) => 1,
            },
        }
    }
}
