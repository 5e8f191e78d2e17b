use thiserror::Error;

/// Errors raised by the geometry, steering and tracing layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} must be unit-norm (got norm {norm})")]
    NonUnit { what: &'static str, norm: f64 },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("degenerate steering geometry: {0}")]
    DegenerateGeometry(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
