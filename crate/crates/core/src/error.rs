use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent with the data.
    /// `field` names the offending parameter (e.g. `"m"`, `"pi_thr"`).
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: &'static str, message: String },

    /// Input data is malformed: wrong shape, non-finite values, bad file contents.
    #[error("data error: {0}")]
    Data(String),

    /// A caller broke an operation's precondition (index out of range, support
    /// outside the minipatch, and so on).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A base selector failed or returned an invalid support on a given iteration.
    #[error("base selector failed at iteration {iteration}: {source}")]
    Selector {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, message: impl Into<String>) -> Self {
        Error::Config {
            field,
            message: message.into(),
        }
    }
}
