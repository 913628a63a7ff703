use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("illegal character at byte {0}")]
    IllegalCharacter(usize),

    #[error("parse error at byte {position}: expected {expected}")]
    Parse { position: usize, expected: String },

    #[error("unknown atomic level `{0}`")]
    UnknownLevel(String),

    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("parameter `{0}` has no numeric binding")]
    UnboundParameter(String),

    #[error("Fock truncation must be at least 1 (got {0})")]
    NonPositiveTruncation(i64),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("level `{0}` still couples off-diagonally after projection")]
    ResidualCoupling(String),

    #[error("invalid channel spec: {0}")]
    InvalidSpec(String),

    #[error("common detuning required, channels use {0:?}")]
    DistinctDetunings(Vec<String>),

    #[error("Fock index {n} exceeds truncation n_max = {n_max}")]
    FockOverflow { n: usize, n_max: usize },

    #[error("operator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("step of {steps_per_period} per drive period does not resolve the detuning (need at least {min})")]
    StepTooLarge { steps_per_period: usize, min: usize },

    #[error("reference trajectory does not share the time grid")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
