use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use divmeter_ingest::IngestError;
use divmeter_store::StoreError;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    BadRequest,
    BadToken,
    NotFound,
    NoComparableData,
    /// Input that cannot be parsed or is empty.
    Unprocessable,
    /// Contradicting manual labels.
    Conflict,
    /// Another writer holds the store; retry.
    Busy,
    VaultLocked,
    LeakDetected,
    RateLimited,
    Internal,
}

/// Error body: `{"error": code, "message": ..., "details": ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub kind: ErrorKind,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(kind: ErrorKind, code: &'static str, message: impl Into<String>) -> Self {
        Self { kind, code, message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(ErrorKind::NotFound, "not_found", format!("not found: {what}"))
    }

    pub fn status(&self) -> StatusCode {
        match self.kind {
            ErrorKind::BadRequest => StatusCode::BAD_REQUEST,
            ErrorKind::BadToken => StatusCode::UNAUTHORIZED,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::NoComparableData | ErrorKind::Conflict => StatusCode::CONFLICT,
            ErrorKind::Unprocessable | ErrorKind::LeakDetected => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::Busy | ErrorKind::VaultLocked => StatusCode::SERVICE_UNAVAILABLE,
            ErrorKind::RateLimited => StatusCode::TOO_MANY_REQUESTS,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn body(&self) -> Value {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(d) = &self.details {
            body["details"] = d.clone();
        }
        body
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut response =
            (self.status(), [(header::CONTENT_TYPE, "application/json")], divmeter_store::canonical_json(&self.body()))
                .into_response();
        if matches!(self.kind, ErrorKind::Busy | ErrorKind::RateLimited) {
            response.headers_mut().insert(header::RETRY_AFTER, header::HeaderValue::from_static("1"));
        }
        response
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::VaultLocked | StoreError::VaultKeyRejected(_) => {
                ApiError::new(ErrorKind::VaultLocked, "vault_locked", message)
            }
            StoreError::ConflictRetryable => ApiError::new(ErrorKind::Busy, "conflict_retryable", message),
            StoreError::NotFound(what) => ApiError::not_found(what),
            StoreError::LeakDetected { path } => {
                ApiError::new(ErrorKind::LeakDetected, "leak_detected", message).with_details(json!({ "path": path }))
            }
            StoreError::InvalidEdition(_) => ApiError::new(ErrorKind::Unprocessable, "invalid_edition", message),
            StoreError::Corrupt { .. } | StoreError::Io { .. } => {
                log::error!("{message}");
                ApiError::new(ErrorKind::Internal, "internal", "store error")
            }
        }
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        let message = e.to_string();
        match e {
            IngestError::HeaderMismatch { expected, found } => {
                ApiError::new(ErrorKind::Unprocessable, "header_mismatch", message)
                    .with_details(json!({ "expected": expected, "found": found }))
            }
            IngestError::MalformedXml { line, offset, .. } => {
                ApiError::new(ErrorKind::Unprocessable, "malformed_xml", message)
                    .with_details(json!({ "line": line, "offset": offset }))
            }
            IngestError::MalformedCsv { file, line, .. } | IngestError::InvalidTable { file, line, .. } => {
                ApiError::new(ErrorKind::Unprocessable, "malformed_csv", message)
                    .with_details(json!({ "file": file, "line": line }))
            }
            IngestError::InvalidEdition(_) => ApiError::new(ErrorKind::Unprocessable, "invalid_edition", message),
            IngestError::ConflictingManualLabels { person, role, facet, first, second } => {
                ApiError::new(ErrorKind::Conflict, "conflicting_manual_labels", message).with_details(json!({
                    "person_id": person,
                    "role": role,
                    "facet": facet,
                    "first": first,
                    "second": second,
                }))
            }
            IngestError::Io(_) => ApiError::new(ErrorKind::Internal, "io", message),
        }
    }
}
