use std::path::Path;

use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unparsable files, out-of-range flags, assumptions that do not hold.
    #[error("{0}")]
    Validation(String),
    /// The numerics ran but a check failed or an iteration broke down.
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<fracisaacs::Error> for CliError {
    fn from(err: fracisaacs::Error) -> Self {
        use fracisaacs::Error as E;
        match err {
            E::IncompleteTable { .. }
            | E::NonFinite { .. }
            | E::AssumptionViolated(_)
            | E::UnsupportedDimension(_)
            | E::InvalidGeometry(_)
            | E::GeometryMismatch(_)
            | E::NotGridAligned { .. }
            | E::InvalidArgument(_)
            | E::GridTooLarge { .. }
            | E::BelowThreshold { .. }
            | E::Config(_) => CliError::Validation(err.to_string()),
            E::OutsideGrid { .. } | E::PreconditionViolated { .. } | E::TooFewRows { .. } => {
                CliError::Numeric(err.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
