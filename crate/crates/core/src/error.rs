use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} is out of range for a chain of {n_sites} spins")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("invalid site pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bitstring is empty")]
    EmptyBitstring,

    #[error("invalid bit value {0}; bits must be 0 or 1")]
    InvalidBit(u8),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("need at least {min} spins, got {got}")]
    TooFewSites { min: usize, got: usize },

    #[error("{got} spins exceeds the dense limit of {limit}")]
    TooManySites { got: usize, limit: usize },

    #[error("coupling list has {found} bonds but a chain of {n_sites} spins needs {expected}")]
    CouplingLength { found: usize, expected: usize, n_sites: usize },

    #[error("invalid couplings: {0}")]
    InvalidCouplings(String),

    #[error("invalid control spec: {0}")]
    InvalidControl(String),

    #[error("drive amplitudes are missing")]
    MissingDrive,

    #[error("control fields are not periodic: {0}")]
    NonPeriodic(String),

    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),

    #[error("integration step {step:e} exceeds the limit {limit:e}")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("density matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("time grids of the trajectories differ")]
    GridMismatch,

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("Pfaffian needs an even dimension, got {0}")]
    OddDimension(usize),

    #[error("matrix is not antisymmetric (deviation {0:e})")]
    NotAntisymmetric(f64),

    #[error("lambda1 must be nonzero")]
    ZeroLambda1,

    #[error("missing correlator {0}")]
    MissingCorrelator(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
