//! Error taxonomy for the pipeline.
//!
//! The classes matter to callers: configuration problems and numeric-range
//! violations map to distinct process exit codes in the CLI, while solver
//! breakdowns and estimation failures are ordinary runtime errors.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Invalid configuration or geometry (bad field values, violated
    /// geometric constraint in strict mode, empty sweep list, ...).
    #[error("config error: {0}")]
    Config(String),

    /// A closed form was requested outside the region where it holds.
    #[error("domain error: {0}")]
    Domain(String),

    /// A scaled exponent would leave double-precision range.
    #[error("numeric range error: {0}")]
    NumericRange(String),

    /// Grid too coarse to resolve the flux firing window.
    #[error("grid refusal: {0}")]
    Grid(String),

    /// Tridiagonal elimination hit a vanishing pivot.
    #[error("linear solver breakdown: {0}")]
    Solver(String),

    /// Least-squares extraction could not be performed.
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
