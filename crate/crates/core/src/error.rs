use thiserror::Error;

/// Errors raised by the solver, the constraint builders and the tests.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
}

pub type Result<T> = std::result::Result<T, ElError>;

pub(crate) fn invalid_input<T>(msg: impl Into<String>) -> Result<T> {
    Err(ElError::InvalidInput(msg.into()))
}

pub(crate) fn invalid_config<T>(msg: impl Into<String>) -> Result<T> {
    Err(ElError::InvalidConfig(msg.into()))
}
