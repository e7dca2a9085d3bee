//! Process-level error classification.
//!
//! Every failure funnels into one of two buckets so the process exit code
//! is predictable for CI: bad inputs (including unusable paths) exit 2,
//! breakdown of the numerics exits 3.  Successful runs exit 0, and runs
//! whose audits recorded violations exit 1 after writing all files.

use std::fmt;

/// Exit code for runs that completed but recorded invariant violations.
pub const EXIT_VIOLATIONS: i32 = 1;
/// Exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

/// A failure that terminates the command.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration, flags, or file-system paths.
    Config(String),
    /// The integrator or quadrature broke down.
    Numerical(String),
}

impl CliError {
    /// Process exit code mandated for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {err}"))
    }
}

/// Convenience alias used by every command.
pub type CliResult<T> = Result<T, CliError>;
