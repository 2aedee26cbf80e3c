//! CLI error taxonomy: validation errors (bad flags, malformed configs or
//! inputs) exit with code 1, runtime errors (failures while doing the work)
//! with code 2. Under `--json-errors` the error is emitted as a single JSON
//! object on stderr so wrappers can parse it.

use occluforge_io::IoError;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }

    /// Wraps an error from the work phase; I/O and format problems keep
    /// their validation/runtime split, everything else is a runtime failure.
    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn validation(e: impl std::fmt::Display) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

/// Simulation errors all describe inputs that violate a contract.
impl From<occluforge_sim::SimError> for CliError {
    fn from(e: occluforge_sim::SimError) -> Self {
        CliError::Validation(e.to_string())
    }
}
