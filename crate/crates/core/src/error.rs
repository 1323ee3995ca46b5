use std::io;

use thiserror::Error;

/// Errors raised by the computation modules and the run driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("density of compartment {compartment} would become {value} (must stay positive)")]
    NonPositiveDensity { compartment: usize, value: f64 },

    #[error("regions {first} and {second} both contain sample {sample}")]
    OverlappingRegions {
        first: usize,
        second: usize,
        sample: usize,
    },

    #[error("trajectory of length {len} is too short for {max_lag} lags")]
    TrajectoryTooShort { len: usize, max_lag: usize },

    #[error("{0}")]
    UnsupportedLaw(&'static str),

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    /// Process exit status associated with this error class.
    ///
    /// Input problems map to 1, everything that goes wrong while computing maps to 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidParameter { .. }
            | Error::DimensionMismatch { .. }
            | Error::OverlappingRegions { .. }
            | Error::TrajectoryTooShort { .. }
            | Error::UnsupportedLaw(_) => 1,
            Error::NonFinite(_)
            | Error::NonPositiveDensity { .. }
            | Error::Numerical(_)
            | Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
