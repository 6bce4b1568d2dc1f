use thiserror::Error;

/// Errors raised by the statistics engine and its file front ends.
#[derive(Debug, Error)]
pub enum Error {
    #[error("statistics undefined: {0}")]
    UndefinedStatistics(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("stream truncated: consumed {consumed} observations, needed {needed}")]
    TruncatedStream { consumed: usize, needed: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("state space too large: {paths} paths to enumerate (limit {limit})")]
    StateSpaceTooLarge { paths: f64, limit: u64 },

    #[error("unsupported rule: {0}")]
    UnsupportedRule(String),

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Validation { .. }
                | Error::Parse { .. }
                | Error::InsufficientData(_)
                | Error::DegenerateData(_)
                | Error::UnsupportedRule(_)
                | Error::UndefinedStatistics(_)
                | Error::StateSpaceTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
