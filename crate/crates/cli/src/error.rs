use thiserror::Error;

use arakelov_core::catalog::CatalogError;
use arakelov_core::divisors::DivisorError;
use arakelov_core::fiber::FiberError;
use arakelov_core::green::GreenError;

/// Failure of a subcommand, classified by who is at fault.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or input files; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// An internal invariant or exact identity failed; exit status 3.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        if e.is_user_error() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

impl From<GreenError> for CliError {
    fn from(e: GreenError) -> Self {
        match e {
            GreenError::InvalidSurface(_) | GreenError::InvalidMeasure(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

/// Errors while analyzing a user-supplied fiber: anything caused by the data is a usage
/// error, a broken solver is internal.
pub fn from_divisor_error(e: DivisorError) -> CliError {
    match e {
        DivisorError::Fiber(FiberError::Linalg(_))
        | DivisorError::Inconsistent { .. }
        | DivisorError::Orthogonality { .. } => CliError::Internal(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("serialization failed: {e}"))
    }
}
