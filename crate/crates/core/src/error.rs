use alloc::string::String;

/// Errors raised by the numerical and sampling routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    /// A quadrature or iteration failed to reach its tolerance.
    #[error("numeric error in {what}: residual estimate {residual:e}")]
    Numeric { what: &'static str, residual: f64 },

    /// Parameters that do not describe a usable configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A sampler ran past its step budget.
    #[error("runtime error: {0}")]
    Runtime(String),

    /// A precondition on a combination of inputs was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
