use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use forge_core::ForgeError;
use serde_json::{json, Map, Value};

/// Error response: `{"error": {"message", ...detail}}` with an HTTP status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub detail: Map<String, Value>,
}

pub type ApiResult<T> = std::result::Result<T, ApiError>;

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            detail: Map::new(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {kind} id {id:?}"))
            .with("kind", json!(kind))
            .with("id", json!(id))
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.detail.insert(key.to_string(), value);
        self
    }

    /// Run parameters that pass the range checks but cannot be planned
    /// (r < 1, m over the cap) are 422 rather than 400.
    pub fn from_plan(e: ForgeError) -> Self {
        match e {
            ForgeError::InvalidParameter(m) => Self::unprocessable(m),
            other => other.into(),
        }
    }

    pub fn body(&self) -> Value {
        let mut err = Map::new();
        err.insert("status".into(), json!(self.status.as_u16()));
        err.insert("message".into(), json!(self.message));
        err.extend(self.detail.clone());
        json!({ "error": err })
    }
}

impl From<ForgeError> for ApiError {
    fn from(e: ForgeError) -> Self {
        let message = e.to_string();
        match e {
            ForgeError::Cell { row, column, .. } => Self::bad_request(message)
                .with("row", json!(row))
                .with("column", json!(column)),
            ForgeError::RaggedRow { row, .. } => Self::bad_request(message).with("row", json!(row)),
            ForgeError::Csv(_) | ForgeError::Json(_) | ForgeError::DuplicateId { .. } => {
                Self::bad_request(message)
            }
            ForgeError::InvalidParameter(_) => Self::bad_request(message),
            ForgeError::UnknownId { kind, id } => Self::not_found(kind, &id),
            ForgeError::TrialCap { trials, cap } => Self::unprocessable(message)
                .with("trials", json!(trials))
                .with("cap", json!(cap)),
            ForgeError::NoClusterFound { .. }
            | ForgeError::NoSharedDims { .. }
            | ForgeError::NotInSubspace { .. }
            | ForgeError::MissingLabel(_)
            | ForgeError::Empty(_) => Self::unprocessable(message),
            ForgeError::Io(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, message),
        }
    }
}

impl From<serde_json::Error> for ApiError {
    fn from(e: serde_json::Error) -> Self {
        Self::bad_request(e.to_string())
            .with("line", json!(e.line()))
            .with("column", json!(e.column()))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}
