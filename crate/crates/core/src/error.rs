use thiserror::Error;

/// Errors raised by model construction and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A field failed validation. `field` is a path such as `patterns[1].gamma`.
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error(
        "exact enumeration supports at most {cap} patterns (got {n}); use the Monte Carlo estimator instead"
    )]
    CapExceeded { n: usize, cap: usize },

    #[error("empty observation: {0}")]
    EmptyObservation(String),

    #[error("malformed bounds for {field}: [{lo}, {hi}]")]
    Bounds { field: String, lo: f64, hi: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Field path for validation errors, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Invalid { field, .. } | Error::Bounds { field, .. } => Some(field),
            _ => None,
        }
    }

    /// Prefixes the field path, e.g. `gamma` -> `patterns[2].gamma`.
    pub(crate) fn within(self, prefix: &str) -> Self {
        match self {
            Error::Invalid { field, message } => Error::Invalid {
                field: format!("{prefix}.{field}"),
                message,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
