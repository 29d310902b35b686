use alloc::string::String;
use core::fmt;

/// Error type shared by all modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A domain is degenerate or violates a construction invariant.
    InvalidDomain(String),
    /// The caller passed arguments outside an operation's contract.
    Usage(String),
    /// An iterative solver failed to reach its tolerance.
    Numerical {
        message: String,
        /// Last residual (or residual-like quantity) seen before giving up.
        residual: f64,
    },
    /// A diagnostic could not be computed (e.g. too few boundary samples).
    Diagnostics(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDomain(m) => write!(f, "invalid domain: {m}"),
            Error::Usage(m) => write!(f, "usage error: {m}"),
            Error::Numerical { message, residual } => {
                write!(f, "numerical failure: {message} (residual {residual:e})")
            }
            Error::Diagnostics(m) => write!(f, "diagnostics error: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
