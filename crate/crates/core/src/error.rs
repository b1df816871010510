use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    #[error(
        "quadrature did not converge ({context}): estimate {value:e}, \
         error estimate {abs_err:e}, requested {requested:e}"
    )]
    Quadrature {
        context: String,
        value: f64,
        abs_err: f64,
        requested: f64,
    },

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),

    /// A run finished but its output cannot be trusted (e.g. too many
    /// horizon-truncated paths).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow(_) | Error::PrecisionLoss(_) | Error::Quadrature { .. } | Error::Numerical(_)
        )
    }

    /// Prefix the context of a quadrature failure, leaving other errors untouched.
    pub fn within(self, outer: impl std::fmt::Display) -> Self {
        match self {
            Error::Quadrature {
                context,
                value,
                abs_err,
                requested,
            } => Error::Quadrature {
                context: format!("{outer}: {context}"),
                value,
                abs_err,
                requested,
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
