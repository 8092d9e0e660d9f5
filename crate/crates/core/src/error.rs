use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a mathematical precondition (exponent range, relation, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration file or value does not match the schema.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// The nonlinear or linear solver could not produce a result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A serialized artifact is malformed.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}
