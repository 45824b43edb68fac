use thiserror::Error;

#[derive(Debug, Error)]
pub enum SteeringError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("measurement direction must be a unit vector (|v| = {norm})")]
    NotUnitVector { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid joint probability table: {0}")]
    InvalidTable(String),

    #[error("settings mismatch: {0}")]
    SettingsMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid input data: {0}")]
    InvalidData(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SteeringError>;

pub(crate) fn invalid(msg: impl Into<String>) -> SteeringError {
    SteeringError::InvalidParameter(msg.into())
}
