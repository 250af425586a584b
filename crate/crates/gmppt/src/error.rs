use thiserror::Error;

/// Errors raised by the plant model, the trackers and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("calibration failed: {anchor} anchor not reproduced ({detail})")]
    Calibration { anchor: &'static str, detail: String },

    #[error("root solve did not converge at v = {v} V, s = {s} kW/m^2")]
    NoConvergence { v: f64, s: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("empty search range: {0}")]
    EmptySearchRange(String),

    #[error("perturb-and-observe exceeded its budget of {budget} samples starting at {v_start} V")]
    TrackerDivergence { v_start: f64, budget: usize },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.into(),
        reason: reason.into(),
    }
}
