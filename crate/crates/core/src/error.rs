use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("{0} is not prime")]
    NotPrime(usize),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("need at least two measurements, got {0}")]
    TooFewSettings(usize),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("not a rank-1 projector: {0}")]
    NotProjector(String),

    #[error("malformed strategy: {0}")]
    MalformedStrategy(String),

    #[error("enumeration needs {required} strategies, guard is {guard}")]
    GuardExceeded { required: u128, guard: u64 },

    #[error("functional pairing has imaginary residue {0:e}")]
    NonRealPairing(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
