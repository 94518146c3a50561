use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("suite not loaded: {0}")]
    SuiteNotLoaded(String),
    #[error("store belongs to a different suite: {0}")]
    SuiteMismatch(String),
    #[error("unknown session")]
    UnknownSession,
    #[error("missing or invalid bearer token")]
    Unauthorized,
    #[error("score {0} is outside 1..=5")]
    ScoreOutOfRange(i64),
    #[error("item {index} is ahead of the next unanswered item {cursor}")]
    IndexAhead { index: usize, cursor: usize },
    #[error("item index {index} is outside 0..{total}")]
    IndexOutOfRange { index: i64, total: usize },
    #[error("not found")]
    NotFound,
    #[error("forbidden")]
    Forbidden,
    #[error("range not satisfiable")]
    RangeNotSatisfiable { len: u64 },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("corrupt store at line {line}: {reason}")]
    CorruptStore { line: usize, reason: String },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession | ServiceError::NotFound => StatusCode::NOT_FOUND,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Forbidden => StatusCode::FORBIDDEN,
            ServiceError::ScoreOutOfRange(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::IndexAhead { .. } => StatusCode::CONFLICT,
            ServiceError::IndexOutOfRange { .. } | ServiceError::BadRequest(_) => {
                StatusCode::BAD_REQUEST
            }
            ServiceError::RangeNotSatisfiable { .. } => StatusCode::RANGE_NOT_SATISFIABLE,
            ServiceError::SuiteNotLoaded(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::SuiteMismatch(_)
            | ServiceError::CorruptStore { .. }
            | ServiceError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    /// Stable machine-readable code for the error body.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::SuiteNotLoaded(_) => "suite_not_loaded",
            ServiceError::SuiteMismatch(_) => "suite_mismatch",
            ServiceError::UnknownSession => "unknown_session",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::ScoreOutOfRange(_) => "score_out_of_range",
            ServiceError::IndexAhead { .. } => "index_ahead",
            ServiceError::IndexOutOfRange { .. } => "index_out_of_range",
            ServiceError::NotFound => "not_found",
            ServiceError::Forbidden => "forbidden",
            ServiceError::RangeNotSatisfiable { .. } => "range_not_satisfiable",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::CorruptStore { .. } => "corrupt_store",
            ServiceError::Io { .. } => "io_failure",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        // internal details stay in the log, not in the response
        let message = if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("request failed: {self}");
            "internal error".to_string()
        } else {
            self.to_string()
        };
        let mut resp = (status, Json(ErrorBody { code: self.code(), message })).into_response();
        if let ServiceError::RangeNotSatisfiable { len } = self {
            if let Ok(v) = format!("bytes */{len}").parse() {
                resp.headers_mut().insert(axum::http::header::CONTENT_RANGE, v);
            }
        }
        resp
    }
}
