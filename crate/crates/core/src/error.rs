use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid of {grid} points cannot resolve {modes} modes (need at least {needed})")]
    GridTooCoarse {
        grid: usize,
        modes: usize,
        needed: usize,
    },
    #[error("negative time {0} is not allowed")]
    NegativeTime(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("symmetric eigensolver did not converge for a {0}x{0} generator")]
    EigenFailure(usize),
    #[error(
        "Picard iteration diverged at iteration {iteration}: distance {previous:e} -> {current:e}"
    )]
    Divergence {
        iteration: usize,
        previous: f64,
        current: f64,
    },
    #[error("CFL violation: step {dt} exceeds mesh width {dz}")]
    Cfl { dt: f64, dz: f64 },
    #[error("gain {rho} outside the contraction range (0, {limit})")]
    GainOutOfRange { rho: f64, limit: f64 },
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("certificate is not valid: {0}")]
    InvalidCertificate(String),
    #[error("trajectories do not match: {0}")]
    TrajectoryMismatch(String),
    #[error("boundary constraint violated by ensemble member {index}: residual {residual:e}")]
    BoundaryConstraint { index: usize, residual: f64 },
    #[error("malformed data: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
