use alloc::string::String;

/// Errors produced by the shaping, coding and DSP routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("target rate {target} bpcu unreachable: {reason}")]
    Unreachable { target: f64, reason: String },
    #[error("sequence composition {got:?} does not match {expected:?}")]
    CompositionMismatch {
        expected: [usize; 2],
        got: [usize; 2],
    },
    #[error("sequence is not in the image of the matcher")]
    NotInImage,
    #[error("invalid code parameters: {0}")]
    CodeParameters(String),
    #[error("girth target {target} not reached after {attempts} attempts")]
    GirthUnreachable { target: u32, attempts: u32 },
    #[error("normal equations are ill-conditioned")]
    IllConditioned,
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
