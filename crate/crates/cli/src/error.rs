use std::fmt;

use paap_core::PaapError;

/// Usage errors exit with 2, everything raised by the library with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(PaapError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(e) => write!(f, "{e}"),
        }
    }
}

impl From<PaapError> for CliError {
    fn from(e: PaapError) -> Self {
        CliError::Domain(e)
    }
}
