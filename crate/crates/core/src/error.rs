use thiserror::Error;

/// Errors raised by map construction, evaluation and the exact engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A floating-point evaluation would need a branch deeper than the
    /// underflow guard allows.
    #[error("precision error: branch index {index} exceeds the float guard {max_float_branch}")]
    Precision { index: u64, max_float_branch: u32 },

    #[error("proportion schedule exhausted: p_{index} requested but the table has {len} entries")]
    ScheduleExhausted { index: u32, len: usize },

    #[error("infeasible branch {branch}: {reason}")]
    Construction { branch: u32, reason: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Errors the CLI maps to exit code 2 (bad input) rather than 3.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Parse(_) | Error::ScheduleExhausted { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
