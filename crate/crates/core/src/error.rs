use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaiError {
    #[error("mean {mean} outside the family's domain [{lo}, {hi}]")]
    MeanOutOfDomain { mean: f64, lo: f64, hi: f64 },

    #[error("observation {value} outside the family's support")]
    OutsideSupport { value: f64 },

    #[error("both weights are zero")]
    DegenerateWeights,

    #[error("mean estimate undefined for an arm with zero samples")]
    UndefinedEstimate,

    #[error("arm {arm} has no samples yet; warm-up incomplete")]
    NotWarmedUp { arm: usize },

    #[error("ambiguous best arm: arms {first} and {second} share the top mean")]
    AmbiguousBestArm { first: usize, second: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("allocation solver failed to converge after {iterations} iterations (residual {residual:e})")]
    SolverFailure { iterations: u64, residual: f64 },

    #[error("oracle instance too large: {0}")]
    OracleSize(String),
}

pub type Result<T> = std::result::Result<T, BaiError>;
