use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::periodic::ConvergenceReport;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain(String),
    /// A state left the admissible subsonic neighborhood.
    Admissibility { t: f64, x: f64, detail: String },
    /// Invalid numerical parameter (grid size, step count, ...).
    InvalidParameter(String),
    /// The predictor–corrector for the implicit weight term did not settle.
    PredictorCorrector { t: f64, x: f64, passes: usize },
    /// Successive iterate differences grew three times in a row.
    NonContraction(Box<ConvergenceReport>),
    /// The iteration cap was reached before the tolerance.
    MaxIter(Box<ConvergenceReport>),
    /// `dt · max|λ| / Δx` exceeded the allowed fraction.
    Cfl { courant: f64, limit: f64 },
    /// Grids that must agree do not.
    GridMismatch(String),
    /// Too little data for a fit.
    InsufficientData(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Admissibility { t, x, detail } => {
                write!(f, "state not admissible at (t={t}, x={x}): {detail}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::PredictorCorrector { t, x, passes } => write!(
                f,
                "predictor-corrector did not converge at (t={t}, x={x}) after {passes} passes"
            ),
            Error::NonContraction(r) => write!(
                f,
                "iteration is not contracting: differences grew three times in a row (after {} iterations)",
                r.iterations_used
            ),
            Error::MaxIter(r) => write!(
                f,
                "iteration cap reached after {} iterations (last difference {:e})",
                r.iterations_used,
                r.diffs.last().copied().unwrap_or(f64::NAN)
            ),
            Error::Cfl { courant, limit } => {
                write!(f, "CFL violation: courant number {courant} exceeds {limit}")
            }
            Error::GridMismatch(msg) => write!(f, "grid mismatch: {msg}"),
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
