use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("no rows survive filtering")]
    EmptyResult,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("sampler produced a non-finite state at sweep {sweep}")]
    Numeric { sweep: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no variables matched between model and dataset")]
    Coverage,
    #[error("sample ids do not align: {}", .0.join(","))]
    Alignment(Vec<String>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("optimizer did not converge (gradient norm {grad_norm:e})")]
    Optimization { grad_norm: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("all stratification values are identical")]
    DegenerateSplit,
}

pub type Result<T> = core::result::Result<T, Error>;
