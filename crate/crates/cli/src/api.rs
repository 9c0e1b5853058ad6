//! Errors as seen by callers: an HTTP status, a machine code and a message.
//! The CLI prints the same code and exits with status 2.

use std::fmt;

use flexcloud::algebra::AlgebraError;
use flexcloud::search::SearchError;
use flexcloud::sql::SqlError;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    pub code: &'static str,
    pub message: String,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            status,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "BAD_REQUEST", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(404, "NOT_FOUND", message)
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        let (status, code) = match &e {
            SearchError::EmptyQuery => (400, "EMPTY_QUERY"),
            SearchError::InvalidQuery(_) => (400, "INVALID_QUERY"),
            SearchError::StaleTerm(_) => (409, "STALE_TERM"),
            SearchError::Spec(_) => (500, "ENTITY_SPEC"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<AlgebraError> for ApiError {
    fn from(e: AlgebraError) -> Self {
        let (status, code) = match &e {
            AlgebraError::UnboundParam(_) => (400, "UNBOUND_PARAM"),
            AlgebraError::ParamType { .. } => (400, "PARAM_TYPE"),
            AlgebraError::UnknownRelation(_)
            | AlgebraError::UnknownColumn { .. }
            | AlgebraError::TypeMismatch(_)
            | AlgebraError::NameCollision(_)
            | AlgebraError::ModeType(_)
            | AlgebraError::Validation(_) => (422, "VALIDATION_ERROR"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<SqlError> for ApiError {
    fn from(e: SqlError) -> Self {
        match e {
            SqlError::Validation(inner) => inner.into(),
            SqlError::UnsupportedDialect(_) => {
                ApiError::new(400, "UNSUPPORTED_DIALECT", e.to_string())
            }
            SqlError::MapText(_) => ApiError::new(500, "INTERNAL", e.to_string()),
        }
    }
}
