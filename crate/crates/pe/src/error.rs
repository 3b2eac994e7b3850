use std::fmt;
use std::io;

use pe_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NONCONVERGENCE: i32 = 3;
    pub const CHECK_FAILED: i32 = 4;
}

#[derive(Debug)]
pub enum RunError {
    /// Unreadable or malformed configuration.
    Config(String),
    /// A parameter violates a hypothesis.
    Validation(String),
    /// A solver failed to converge or left the admissible set.
    Solver(CoreError),
    /// A post-run check failed.
    Check(String),
    Io(io::Error),
    Internal(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Validation(_) => exit::CONFIG,
            RunError::Solver(e) => match e {
                CoreError::NonContraction(_)
                | CoreError::MaxIter(_)
                | CoreError::PredictorCorrector { .. }
                | CoreError::Admissibility { .. }
                | CoreError::Cfl { .. } => exit::NONCONVERGENCE,
                CoreError::Domain(_) | CoreError::InvalidParameter(_) => exit::CONFIG,
                _ => exit::INTERNAL,
            },
            RunError::Check(_) => exit::CHECK_FAILED,
            RunError::Io(_) | RunError::Internal(_) => exit::INTERNAL,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Validation(m) => write!(f, "validation error: {m}"),
            RunError::Solver(e) => write!(f, "solver error: {e}"),
            RunError::Check(m) => write!(f, "check failed: {m}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
            RunError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        RunError::Solver(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}
