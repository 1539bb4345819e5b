use thiserror::Error;

/// Errors raised by the simulator and the theory engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// The inputs are individually valid but do not fit together.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A treatment-effect estimate was requested with an empty arm.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Exhaustive enumeration would exceed the supported size.
    #[error("capacity exceeded: {what} = {value} (limit {limit})")]
    Capacity {
        what: &'static str,
        value: usize,
        limit: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
