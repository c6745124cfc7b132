use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("prime {p} divides the group order {order}")]
    BadPrime { p: u64, order: u64 },
    #[error("element is not an involution")]
    NotInvolution,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("prime power must be at least 2, got {0}")]
    BadPrimePower(u64),
    #[error("brute-force size cap exceeded: {0}")]
    SizeCap(String),
    #[error("shape incompatible with measure: {0}")]
    IncompatibleShape(String),
    #[error("class datum is missing ideal {0}")]
    MissingIdeal(String),
    #[error("no usable bound certificate for the integrand")]
    NoBoundCertificate,
    #[error("L-series pole: Euler factor vanishes at the evaluation point")]
    EulerPole,
    #[error("character error: {0}")]
    BadCharacter(String),
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("discriminant cap exceeded: |{0}| > {1}")]
    DiscriminantCap(i64, u64),
    #[error("inadmissible quartic discriminant: {0}")]
    Inadmissible(String),
    #[error("class-number table has no row for discriminant {0}")]
    TableGap(i64),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
