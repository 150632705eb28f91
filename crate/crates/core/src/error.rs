use core::fmt;

/// Errors raised by the numerical kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    Domain { what: &'static str, value: f64 },
    /// A distribution parameter violates its positivity/finiteness constraint.
    InvalidParameter { name: &'static str, value: f64 },
    /// The input sample or array was empty.
    Empty(&'static str),
    /// A sample contained a non-finite or non-positive value.
    InvalidSample { index: usize, value: f64 },
    /// Not enough points survive exclusions to perform a fit.
    TooFewPoints { needed: usize, got: usize },
    /// A configuration value is inconsistent.
    Config(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "domain error: {what} (got {value})"),
            Error::InvalidParameter { name, value } => {
                write!(
                    f,
                    "invalid parameter {name} = {value}: must be finite and positive"
                )
            }
            Error::Empty(what) => write!(f, "{what} is empty"),
            Error::InvalidSample { index, value } => {
                write!(
                    f,
                    "sample value #{index} = {value} is not a finite positive number"
                )
            }
            Error::TooFewPoints { needed, got } => {
                write!(
                    f,
                    "too few points for fit: need at least {needed}, got {got}"
                )
            }
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}
