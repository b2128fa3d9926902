use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use crate::store::SessionStatus;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("dataset `{dataset}` is invalid")]
    DatasetInvalid { dataset: String, detail: String },

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("generation {0} does not exist")]
    UnknownGeneration(String),

    #[error("unknown shape `{0}`")]
    UnknownShapeId(String),

    #[error("session is {0:?}")]
    WrongStatus(SessionStatus),

    #[error("no such endpoint")]
    NoRoute,

    #[error("internal error")]
    Internal(String),
}

/// JSON body of every error response.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    pub detail: Option<String>,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::DatasetInvalid { .. } => "dataset_invalid",
            ServiceError::InvalidRequest(_) => "invalid_request",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::UnknownGeneration(_) => "unknown_generation",
            ServiceError::UnknownShapeId(_) => "unknown_shape_id",
            ServiceError::WrongStatus(_) => "wrong_status",
            ServiceError::NoRoute => "not_found",
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::DatasetInvalid { .. } | ServiceError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::UnknownSession(_)
            | ServiceError::UnknownGeneration(_)
            | ServiceError::UnknownShapeId(_)
            | ServiceError::NoRoute => StatusCode::NOT_FOUND,
            ServiceError::WrongStatus(_) => StatusCode::CONFLICT,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn detail(&self) -> Option<String> {
        match self {
            ServiceError::DatasetInvalid { detail, .. } | ServiceError::Internal(detail) => Some(detail.clone()),
            _ => None,
        }
    }

    pub fn internal(e: impl std::fmt::Display) -> ServiceError {
        ServiceError::Internal(e.to_string())
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if let ServiceError::Internal(detail) = &self {
            tracing::error!(%detail, "request failed");
        }
        let body = ErrorBody {
            code: self.code(),
            message: self.to_string(),
            detail: self.detail(),
        };
        (self.status(), Json(body)).into_response()
    }
}
