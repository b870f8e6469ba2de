use thiserror::Error;

/// Errors raised while configuring or running a solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("layout mismatch: expected dimension {expected}, got {found}")]
    LayoutMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("metric group `{0}` has no variables")]
    EmptyGroup(String),

    #[error("granularity {0} is not supported by this problem")]
    UnsupportedGranularity(&'static str),

    #[error("value outside the domain of the closed form: {0}")]
    Domain(String),

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("iterate became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
