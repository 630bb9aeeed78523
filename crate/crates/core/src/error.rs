use alloc::string::String;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("row {row}, item {item}: unrecognized category label {label:?}")]
    Category { row: String, item: usize, label: String },

    #[error("unit {0} has no neighbors")]
    IsolatedUnit(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("no convergence after {iterations} iterations (last change {delta:e})")]
    NonConvergence { iterations: usize, delta: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("sampling resolution: {0}")]
    Resolution(String),

    #[error("no valid elevation cells: {0}")]
    Coverage(String),

    #[error("no qualifying event for unit {0}")]
    MissingCovariate(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! input_err {
    ($($arg:tt)*) => { $crate::error::Error::Input(alloc::format!($($arg)*)) };
}
pub(crate) use input_err;
