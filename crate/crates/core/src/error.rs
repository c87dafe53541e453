use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("non-finite integrand value at {at}")]
    NonFinite { at: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("requested accuracy not reached: {0}")]
    Accuracy(&'static str),
    #[error("singular system: {0}")]
    Singular(&'static str),
    #[error("insufficient data: {0}")]
    Insufficient(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
