use thiserror::Error;

/// Errors raised by the numerical engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("non-positive density: {0}")]
    NonPositiveDensity(String),
    #[error("drift is not the gradient of phi: max |b - 2D grad phi| = {deviation:e} > {tolerance:e}")]
    DriftNotGradient { deviation: f64, tolerance: f64 },
    #[error("negative or non-finite time {0}")]
    NegativeTime(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("phase unwrap failed near x = {x}")]
    PhaseUnwrapFailure { x: f64 },
    #[error("stability bound violated: {0}")]
    StabilityViolation(String),
    #[error("{fraction:.4} of particles left the drift domain")]
    DriftDomainExceeded { fraction: f64 },
    #[error("need at least 2 particles, got {0}")]
    TooFewParticles(usize),
    #[error("grid covers only {coverage:.6} of the particles")]
    CoverageTooLow { coverage: f64 },
    #[error("control volume [{a}, {b}] is not inside the grid")]
    VolumeOutsideGrid { a: f64, b: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
