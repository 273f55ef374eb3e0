use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed group spec `{0}`: expected comma-separated integers")]
    MalformedGroup(String),
    #[error("cyclic factor {0} is smaller than 2")]
    FactorTooSmall(u64),
    #[error("group order overflows the supported range")]
    GroupTooLarge,
    #[error("element has {found} coordinates but the group has {expected} factors")]
    CoordinateCount { expected: usize, found: usize },
    #[error("coordinate {value} is out of range for cyclic factor {factor}")]
    CoordinateRange { value: u64, factor: u64 },
    #[error("group {0} is not a p-group")]
    NotPGroup(String),
    #[error("{q} does not divide the exponent {exponent}")]
    NotDivisor { q: u64, exponent: u64 },
    #[error("sequences live over different groups ({0} vs {1})")]
    GroupMismatch(String, String),
    #[error("not a subsequence")]
    NotSubsequence,
    #[error("invalid sequence file: {0}")]
    SequenceFormat(String),
    #[error("resource cap exceeded: {needed} table cell updates > cap {cap}")]
    ResourceCap { needed: u64, cap: u64 },
    #[error("naive enumeration supports at most {max} terms, got {len}")]
    NaiveTooLong { len: usize, max: usize },
    #[error("invalid length set: {0}")]
    InvalidLengths(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("missing parameter `{0}`")]
    MissingParam(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("cube dimension {m} exceeds the supported maximum {max}")]
    CubeTooLarge { m: usize, max: usize },
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("premise violation: {0}")]
    PremiseViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
