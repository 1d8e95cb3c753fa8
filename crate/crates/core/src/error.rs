use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid server loads: {0}")]
    InvalidLoads(String),

    #[error("{what} index {index} out of range (count {count})")]
    IndexOutOfRange { what: &'static str, index: usize, count: usize },

    #[error("dimension mismatch: expected {expected} {what}, got {actual}")]
    DimensionMismatch { what: &'static str, expected: usize, actual: usize },

    #[error("sequential dynamics infeasible: largest job length {lambda_max} is not below the total service rate {mu_total}")]
    SequentialInfeasible { lambda_max: f64, mu_total: f64 },

    #[error("simultaneous dynamics infeasible: total arrival rate exceeds the total service rate ({lambda_total} >= {mu_total})")]
    SimultaneousInfeasible { lambda_total: f64, mu_total: f64 },

    #[error("profile is not a Nash equilibrium (max improvement {improvement:e})")]
    NotNash { improvement: f64 },

    #[error("oracle did not converge after {iterations} iterations")]
    OracleDiverged { iterations: usize },

    #[error("unknown setting `{0}`")]
    UnknownSetting(String),

    #[error("instance generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trace is empty")]
    EmptyTrace,

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, GameError>;
