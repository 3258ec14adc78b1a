use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

pub type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: String },
    #[error(transparent)]
    Core(#[from] ipd_core::Error),
    #[error("{0}")]
    BadRequest(String),
    #[error("stored document is unreadable: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("worker task failed: {0}")]
    Join(String),
}

impl ApiError {
    pub fn not_found(kind: &'static str, id: &str) -> Self {
        ApiError::NotFound {
            kind,
            id: id.to_owned(),
        }
    }

    pub fn status(&self) -> StatusCode {
        use ipd_core::Error as E;
        match self {
            ApiError::NotFound { .. } => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Core(E::Untrained | E::InvalidState(_)) => StatusCode::CONFLICT,
            ApiError::Core(E::Io(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Core(_) => StatusCode::BAD_REQUEST,
            ApiError::Corrupt(_) | ApiError::Io(_) | ApiError::Json(_) | ApiError::Join(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    fn code(&self) -> &'static str {
        use ipd_core::Error as E;
        match self {
            ApiError::NotFound { .. } => "not_found",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::Core(E::Untrained) => "untrained",
            ApiError::Core(E::InvalidState(_)) => "invalid_state",
            ApiError::Core(E::RatingSetMismatch { .. } | E::RatingOutOfRange { .. }) => {
                "invalid_ratings"
            }
            ApiError::Core(E::Io(_)) => "internal",
            ApiError::Core(_) => "validation",
            _ => "internal",
        }
    }

    fn details(&self) -> serde_json::Value {
        use ipd_core::Error as E;
        match self {
            ApiError::Core(E::RatingSetMismatch {
                missing,
                unexpected,
            }) => {
                json!({ "missing": missing, "unexpected": unexpected })
            }
            ApiError::Core(E::RatingOutOfRange {
                pattern_id,
                rating,
                classes,
            }) => {
                json!({ "pattern_id": pattern_id, "rating": rating, "classes": classes })
            }
            _ => serde_json::Value::Null,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        let details = self.details();
        if !details.is_null() {
            body["details"] = details;
        }
        (status, Json(body)).into_response()
    }
}
