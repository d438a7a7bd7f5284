//! CLI error wrapper carrying the process exit code.
//!
//! Exit codes: 0 ok, 1 I/O, 2 configuration, 3 model protocol,
//! 4 degenerate response, 5 numerical failure.

use gadd_core::GaddError;

use crate::config::ConfigError;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn protocol(message: String) -> Self {
        Self { code: 3, message }
    }

    pub fn io(message: String) -> Self {
        Self { code: 1, message }
    }

    pub fn from_config(e: ConfigError) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }

    pub fn from_core(e: GaddError) -> Self {
        let code = match &e {
            GaddError::ModelEvaluation(_) => 3,
            GaddError::DegenerateResponse { .. } => 4,
            GaddError::InvalidSubset(_)
            | GaddError::NotSquare { .. }
            | GaddError::NotSymmetric { .. }
            | GaddError::InvalidTruncation(_) => 2,
            _ => 5,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}
