use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("shape mismatch: expected {expected} entries, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("right side has nonzero mean {mean:e}; periodic Poisson problem is unsolvable")]
    NonZeroMean { mean: f64 },
    #[error("fiber point too close to the origin (|p| = {norm:e}); time step too large?")]
    DegeneratePoint { norm: f64 },
    #[error("radius {0} outside (0, L/2]")]
    BadRadius(f64),
    #[error("bubble scale {scale} outside [{min}, {max}]")]
    BadScale { scale: f64, min: f64, max: f64 },
    #[error("step rejected after {attempts} halvings of dt (last dt = {dt:e})")]
    StepRejected { attempts: usize, dt: f64 },
    #[error("non-finite value in {0}")]
    NonFiniteField(&'static str),
    #[error("energy increased from {before} to {after} between accepted steps")]
    MonotonicityViolation { before: f64, after: f64 },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
