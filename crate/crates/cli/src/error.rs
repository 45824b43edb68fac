use std::fmt;

use steering_core::SteeringError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag values.
    Usage(String),
    /// Unreadable or inconsistent input data.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<SteeringError> for CliError {
    fn from(e: SteeringError) -> Self {
        use SteeringError::*;
        match e {
            InvalidParameter(_)
            | NotUnitVector { .. }
            | SettingsMismatch(_)
            | Unsupported(_)
            | EmptyInput(_) => CliError::Usage(e.to_string()),
            InvalidState(_) | InvalidTable(_) | Parse { .. } | InvalidData(_) | Io(_) => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
