use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rotation axis must be a unit vector (|axis| = {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("kicks are indexed from t = 1; t = 0 is the initial state")]
    KickAtZero,

    #[error("Floquet unitary is proportional to the identity; eigenbasis undefined")]
    DegenerateFloquet,

    #[error("invalid arc partition: {0}")]
    InvalidArcs(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("moment orders differ ({left} vs {right})")]
    OrderMismatch { left: usize, right: usize },

    #[error("moment order {0} outside supported range")]
    InvalidOrder(usize),

    #[error("invalid sample times: {0}")]
    InvalidSampleTimes(String),

    #[error("invalid calibration: {0}")]
    Calibration(String),

    #[error("polarization efficiency must lie in (0, 1], got {0}")]
    InvalidEfficiency(f64),

    #[error("Bloch vector too short to define a direction (|r| = {norm:e})")]
    UndefinedDirection { norm: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
