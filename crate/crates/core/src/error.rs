use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("variable x{var} is out of range for n = {n}")]
    VariableOutOfRange { var: usize, n: usize },
    #[error("variable x{0} is repeated on a root-to-leaf path")]
    RepeatedVariable(usize),
    #[error("{n} variables exceeds the cap of {cap}")]
    TooManyVariables { n: usize, cap: usize },
    #[error("restriction fixes x{0} more than once")]
    DuplicateVariable(usize),
    #[error("arity mismatch: {left} vs {right} variables")]
    ArityMismatch { left: usize, right: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("membership query refused: oracle is in examples-only mode")]
    AccessViolation,
    #[error("no example consistent with the restriction after {attempts} attempts")]
    SamplingExhausted { attempts: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("subproblem space of {needed} exceeds the limit of {limit}")]
    ResourceLimit { needed: u128, limit: u128 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
