use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cws_core::Error;
use serde::{Deserialize, Serialize};

/// Error body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn unknown_version(version: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "UNKNOWN_VERSION",
            format!("API version {version:?} is not supported; use \"v1\""),
        )
    }

    pub fn bad_body(detail: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "INVALID_BODY", format!("malformed request body: {detail}"))
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        use StatusCode as S;
        let (status, code) = match &err {
            Error::InvalidExecutionId(_) => (S::BAD_REQUEST, "INVALID_EXECUTION_ID"),
            Error::DuplicateExecution(_) => (S::CONFLICT, "DUPLICATE_EXECUTION"),
            Error::UnknownExecution(_) => (S::NOT_FOUND, "UNKNOWN_EXECUTION"),
            Error::UnknownStrategy(_) => (S::BAD_REQUEST, "UNKNOWN_STRATEGY"),
            Error::UnknownVertex(_) => (S::BAD_REQUEST, "UNKNOWN_VERTEX"),
            Error::VertexInUse(_) => (S::CONFLICT, "VERTEX_IN_USE"),
            Error::WouldCreateCycle { .. } => (S::CONFLICT, "WOULD_CREATE_CYCLE"),
            Error::BatchAlreadyOpen => (S::CONFLICT, "BATCH_ALREADY_OPEN"),
            Error::NoBatchOpen => (S::CONFLICT, "NO_BATCH_OPEN"),
            Error::DuplicateTask(_) => (S::CONFLICT, "DUPLICATE_TASK"),
            Error::UnknownTask(_) => (S::NOT_FOUND, "UNKNOWN_TASK"),
            Error::TaskNotWithdrawable { .. } => (S::CONFLICT, "TASK_NOT_WITHDRAWABLE"),
            Error::InvalidTask(_) => (S::BAD_REQUEST, "INVALID_TASK"),
            Error::IllegalTransition { .. } => (S::CONFLICT, "ILLEGAL_TRANSITION"),
            _ => (S::BAD_REQUEST, "BAD_REQUEST"),
        };
        Self::new(status, code, err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_owned(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}
