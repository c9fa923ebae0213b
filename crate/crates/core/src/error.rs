use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// The variants map one-to-one onto the exit codes of the command-line
/// runner: usage (2), resource (3) and failed assertion (1).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("assertion failed: {invariant}: {detail}")]
    Assertion { invariant: String, detail: String },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn precision(msg: impl Into<String>) -> Self {
        Error::Precision(msg.into())
    }

    pub fn assertion(invariant: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Assertion {
            invariant: invariant.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::usage(format!("exponent p must be a finite real >= 1, got {p}")));
    }
    Ok(())
}
