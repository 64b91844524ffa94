use thiserror::Error;

/// Everything that can go wrong inside the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("at least 2 detections are required, got {0}")]
    InsufficientDetections(usize),

    #[error("detection geometry is rank deficient (singular value ratio {ratio:.3e})")]
    SingularGeometry { ratio: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("tangential velocity vanishes at this angle; the synthetic array has no angular response")]
    DegenerateGeometry,

    #[error("zero tangential velocity: angle error variance is unbounded")]
    ZeroTangentialVelocity,

    #[error("omega(N) is undefined for N < 2 (got N = {0})")]
    UndefinedForN1(usize),

    #[error("reflector ranges are required for imaging")]
    MissingRanges,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
