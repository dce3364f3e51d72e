use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// The variants map one-to-one onto the CLI exit-code classes: parameter
/// and contract errors are caller mistakes, capacity errors mean the exact
/// solvers refuse the size, degenerate errors mean the requested quantity is
/// not defined for the given parameters.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }
}

/// Checks that `value` is a probability.
pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{value} is not in [0, 1]")))
    }
}
