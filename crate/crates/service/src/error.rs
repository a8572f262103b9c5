use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use segbench_core::growcut::GrowCutError;
use serde_json::json;

/// Error body: `{"error": kind, "message": text}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", format!("unknown {what} '{id}'"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl From<GrowCutError> for ApiError {
    fn from(e: GrowCutError) -> Self {
        let kind = match e {
            GrowCutError::ConflictingSeed(_) => "ConflictingSeed",
            GrowCutError::OutOfRange { .. } => "OutOfRange",
            GrowCutError::EmptyForeground => "EmptyForeground",
            GrowCutError::DimsMismatch { .. } => "DimsMismatch",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.kind, "message": self.message}))).into_response()
    }
}
