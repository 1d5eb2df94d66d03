use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// One entry per violated configuration invariant.
    InvalidConfig(Vec<String>),
    /// A value outside the domain of an operation.
    Domain(String),
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    NonFinite(&'static str),
    /// Bisection bracket without a sign change.
    NotInvertible { target: f64, lo: f64, hi: f64 },
    /// The horizon Hessian failed its Cholesky factorization.
    Indefinite,
    InsufficientData(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(violations) => {
                write!(f, "invalid configuration: ")?;
                for (i, v) in violations.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            Error::Domain(msg) => write!(f, "{msg}"),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected dimension {expected}, found {found}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::NotInvertible { target, lo, hi } => write!(
                f,
                "moment {target} is not bracketed by the search interval [{lo}, {hi}] m/s"
            ),
            Error::Indefinite => write!(f, "horizon Hessian is not positive definite"),
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
