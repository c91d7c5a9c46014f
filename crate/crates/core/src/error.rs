use thiserror::Error;

/// Errors produced by construction, encoding and verification.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty partition requested")]
    EmptyPartition,

    #[error("truncation too shallow: index {index} is constrained but missing from coords")]
    TruncationTooShallow { index: String },

    #[error("parameter out of range: {value} is not in [0,1]")]
    ParamOutOfRange { value: String },

    #[error("index allocation out of phase: {0}")]
    AllocationPhase(String),

    #[error("invalid model at {location}: {reason}")]
    ModelInvalid { location: String, reason: String },

    #[error("dangling point reference {point}: {reason}")]
    DanglingPoint { point: String, reason: String },

    #[error("ambiguous address: cannot resolve {level}; candidates: {}", candidates.join(", "))]
    AmbiguousAddress {
        level: &'static str,
        candidates: Vec<String>,
    },

    #[error("depth {depth} too shallow: {need}")]
    DepthTooShallow { depth: usize, need: String },

    #[error("depth {depth} exceeds the brute-force bound {bound}; pass an explicit override to go deeper")]
    DepthExceedsBound { depth: usize, bound: usize },

    #[error("cannot parse {what}: {reason}")]
    Parse { what: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
