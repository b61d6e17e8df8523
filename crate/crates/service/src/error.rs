use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;
use tom2_core::{EndReason, SessionError};

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown session")]
    NotFound,
    #[error("session has ended ({0})")]
    Ended(EndReason),
    #[error("terminate is locked out until the next placement")]
    Locked,
    #[error("{0}")]
    BadRequest(String),
    #[error("missing or wrong operator token")]
    Unauthorized,
    #[error("transcript write failed: {0}")]
    Io(#[from] std::io::Error),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound => StatusCode::NOT_FOUND,
            ApiError::Ended(_) => StatusCode::CONFLICT,
            ApiError::Locked => StatusCode::LOCKED,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Unauthorized => StatusCode::UNAUTHORIZED,
            ApiError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Ended(reason) => ApiError::Ended(reason),
            SessionError::Locked => ApiError::Locked,
            SessionError::InvalidScore(_) => ApiError::BadRequest(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}
