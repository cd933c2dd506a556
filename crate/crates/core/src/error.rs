use thiserror::Error;

/// Errors raised by waveform synthesis, coding, detection and estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates a documented invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A function argument is outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A rank is outside `1..=count`.
    #[error("rank {rank} out of range 1..={count}")]
    RankOutOfRange { rank: String, count: String },

    /// An index sequence breaks the ordering or cyclic separation rule.
    #[error("index sequence violates separation: gap s_{gap} = {value} < {delta}")]
    SeparationViolated { gap: usize, value: i64, delta: usize },

    /// Two vectors that must align have different lengths.
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// The greedy detector ran out of admissible bins.
    #[error("only {found} of {wanted} admissible indices could be detected")]
    DetectionInfeasible { found: usize, wanted: usize },

    /// Configuration file or CSV I/O failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
