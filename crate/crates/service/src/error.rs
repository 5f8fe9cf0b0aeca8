use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cineforge_core::scene::Violation;
use serde_json::json;
use thiserror::Error;

use crate::store::SceneId;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("scene {0} not found")]
    NotFound(SceneId),
    #[error("revision conflict: request is based on {expected}, scene is at {current}")]
    Conflict { expected: u64, current: u64 },
    #[error("this request requires an If-Match header carrying the scene revision")]
    PreconditionRequired,
    #[error("{0}")]
    BadRequest(String),
    #[error("request body does not match the scene schema: {0}")]
    Schema(String),
    #[error("scene violates {} invariant(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::PreconditionRequired => StatusCode::PRECONDITION_REQUIRED,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Schema(_) | ApiError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Violations as `{"message": ..., "kind": ..., <fields>}` objects.
pub fn violation_list(vs: &[Violation]) -> serde_json::Value {
    vs.iter()
        .map(|v| {
            let mut o = serde_json::to_value(v).expect("violations serialize");
            o["message"] = json!(v.to_string());
            o
        })
        .collect()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        let mut body = json!({ "error": self.to_string() });
        match &self {
            ApiError::Conflict { current, .. } => body["current_revision"] = json!(current),
            ApiError::Invalid(vs) => body["violations"] = violation_list(vs),
            _ => {}
        }
        (status, Json(body)).into_response()
    }
}
