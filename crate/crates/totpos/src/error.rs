use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("invalid minor index: {0}")]
    InvalidMinorIndex(String),

    #[error("dimension {n} exceeds the minor-enumeration cap of {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("denominator is zero")]
    ZeroDenominator,

    #[error("division by zero")]
    DivisionByZero,

    #[error("expected a positive value: {0}")]
    NonPositive(String),

    #[error("prime factor of {value} exceeds the factor-base cap {cap}")]
    FactorBaseTooLarge { value: String, cap: u64 },

    #[error("matrix is not invertible totally nonnegative: {reason}")]
    NotItn { reason: String },

    #[error("matrix is not totally positive: {reason}")]
    NotTp { reason: String },

    #[error("expected a positive diagonal matrix: {0}")]
    NotPositiveDiagonal(String),

    #[error("matrix is diagonal; no negative inverse entry exists")]
    DiagonalInput,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("perturbation did not reach the target distance after {iterations} halvings")]
    PerturbationStalled { iterations: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("generator image table is inconsistent at entry `{entry}`: {reason}")]
    InconsistentTable { entry: String, reason: String },

    #[error("sample outside the supported domain: {0}")]
    SampleOutsideDomain(String),

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("cannot parse rational `{0}`")]
    ParseRational(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
