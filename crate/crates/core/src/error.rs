use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or configuration field failed validation.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// A parameter drove a derived quantity outside its feasible range.
    #[error("{what} out of range: {reason}")]
    Range { what: String, reason: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Observed data contradicts itself (e.g. a degree below the within-sample degree).
    #[error("inconsistent observation: {0}")]
    Consistency(String),

    /// A state or value lies outside the support of the density being evaluated.
    #[error("outside support: {0}")]
    Domain(String),

    /// The estimator is not defined for this input.
    #[error("estimator undefined: {0}")]
    Undefined(String),

    #[error("chain initialization failed: {0}")]
    Initialization(String),

    #[error("instance too large: {0}")]
    Size(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line tool: 1 for bad input, 2 for
    /// failures while running an estimator or writing results.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::Range { .. }
            | Error::Argument(_)
            | Error::Consistency(_)
            | Error::Parse(_)
            | Error::Json(_) => 1,
            Error::Domain(_)
            | Error::Undefined(_)
            | Error::Initialization(_)
            | Error::Size(_)
            | Error::Io(_)
            | Error::Csv(_) => 2,
        }
    }
}
