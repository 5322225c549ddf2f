use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation of U^dag U from I is {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid density state: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid Kraus channel: {0}")]
    InvalidChannel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("eigen-sum and partial-trace evaluations of S(U,V) disagree by {residual:e}")]
    PathDisagreement { residual: f64 },

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed matrix data: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
