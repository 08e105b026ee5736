use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fgrid_core::grid::CompileIssue;
use fgrid_core::CatalogError;
use serde::Serialize;

/// Every non-2xx response body: `{"code": ..., "message": ...}`, plus the
/// per-cell issue list when a grid fails to compile.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<CompileIssue>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { code: code.into(), message: message.into(), errors: Vec::new() } }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", message)
    }

    pub fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    /// Malformed JSON is a 400; well-formed JSON of the wrong shape is a 422.
    pub fn from_json(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => Self::unprocessable("invalid-body", e.to_string()),
            _ => Self::new(StatusCode::BAD_REQUEST, "malformed-json", e.to_string()),
        }
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        let status = match &e {
            CatalogError::UnknownClass(_) | CatalogError::UnknownAttribute { .. } | CatalogError::UnknownInstrument(_) => {
                StatusCode::NOT_FOUND
            }
            CatalogError::DuplicateClass(_)
            | CatalogError::DuplicateAttribute { .. }
            | CatalogError::DuplicateInstrument(_)
            | CatalogError::DuplicateTimestamp { .. } => StatusCode::CONFLICT,
            CatalogError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        if let CatalogError::Compile(c) = e {
            err.body.errors = c.issues;
        }
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
