use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// Error body: `{code, message, field?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                code: "invalid_field".into(),
                message: message.into(),
                field: Some(field.into()),
            },
        }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                code: "malformed_body".into(),
                message: message.into(),
                field: None,
            },
        }
    }
}

impl From<patternlab::Error> for ApiError {
    fn from(err: patternlab::Error) -> Self {
        use patternlab::Error;
        match &err {
            Error::Invalid { field, message } => ApiError::invalid(field.clone(), message.clone()),
            Error::CapExceeded { .. } => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: ErrorBody {
                    code: "cap_exceeded".into(),
                    message: format!("{err}; pass \"mc\": {{\"samples\": N, \"seed\": S}} to use Monte Carlo mode"),
                    field: Some("patterns".into()),
                },
            },
            _ => ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                body: ErrorBody {
                    code: "internal".into(),
                    message: err.to_string(),
                    field: err.field().map(str::to_owned),
                },
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
