//! Uniform record for every numerical check.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Residual reported when a check could not be evaluated at all.
pub const FAILED_RESIDUAL: f64 = f64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub inputs: String,
    pub residual: f64,
    pub tolerance: f64,
    pub status: Status,
    pub notes: String,
}

impl VerificationReport {
    pub fn new(check: impl Into<String>, inputs: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let status = if residual.is_finite() && residual <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        VerificationReport {
            check: check.into(),
            inputs: inputs.into(),
            residual: if residual.is_finite() { residual } else { FAILED_RESIDUAL },
            tolerance,
            status,
            notes: String::new(),
        }
    }

    /// Report for a check whose evaluation raised an error.
    pub fn errored(check: impl Into<String>, inputs: impl Into<String>, tolerance: f64, err: &Error) -> Self {
        VerificationReport {
            check: check.into(),
            inputs: inputs.into(),
            residual: FAILED_RESIDUAL,
            tolerance,
            status: Status::Fail,
            notes: format!("error: {err}"),
        }
    }

    /// Downgrade a failure to inconclusive when the finite-difference noise
    /// is at least half the residual.
    pub fn with_fd_error(mut self, fd_error: f64) -> Self {
        if self.status == Status::Fail && self.residual != FAILED_RESIDUAL && fd_error >= 0.5 * self.residual {
            self.status = Status::Inconclusive;
        }
        self.note(format!("fd_error={fd_error:.3e}"))
    }

    pub fn note(mut self, text: impl AsRef<str>) -> Self {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(text.as_ref());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}
