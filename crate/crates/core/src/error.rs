use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma pole at non-positive integer {0}")]
    Pole(f64),

    /// The value is finite but not representable; callers switch to the log form.
    #[error("{0} overflows f64, use the log-domain variant")]
    Overflow(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("configuration error at `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("target BLER {target:e} not attainable within [{lo}, {hi}] dBm")]
    Bracket { target: f64, lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
