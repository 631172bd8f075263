use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),

    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] spindd::Error),
}

impl LabError {
    /// Process exit code: 1 config, 2 constraint, 3 numerical.
    pub fn exit_code(&self) -> u8 {
        use spindd::Error as E;
        match self {
            LabError::Config(_) | LabError::Io { .. } => 1,
            LabError::Constraint(_) => 2,
            LabError::Numerical(_) => 3,
            LabError::Core(e) => match e {
                E::TooManySites { .. }
                | E::TooFewSites { .. }
                | E::InvalidCouplings(_)
                | E::InvalidControl(_)
                | E::NonPeriodic(_)
                | E::MissingDrive
                | E::ZeroLambda1
                | E::CouplingLength { .. } => 2,
                E::StepTooLarge { .. }
                | E::NotHermitian(_)
                | E::NotPositive(_)
                | E::NotNormalized(_)
                | E::Linalg(_)
                | E::NotAntisymmetric(_)
                | E::GridMismatch => 3,
                _ => 1,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}
