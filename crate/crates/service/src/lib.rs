//! Interactive, session-based dialogue-to-video retrieval.
//!
//! A client opens a session, posts dialogue turns one at a time (as raw
//! text or precomputed embeddings) and asks for the current ranking or for
//! the per-frame attention weights of any indexed video. Payload schemas
//! are documented in `docs/api.md`.

pub mod api;
pub mod config;
pub mod engine;
pub mod index;
pub mod provider;
pub mod session;

use std::sync::Arc;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use api::router;
pub use config::ServiceConfig;
pub use engine::{RankedVideo, Retrieval};
pub use index::{Index, IndexError};
pub use provider::{EmbeddingProvider, HashingStub, HttpProvider, ProviderError};
pub use session::{Session, SessionStore};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    TurnLimit(String),
    #[error("{0}")]
    Unavailable(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::TurnLimit(_) => StatusCode::CONFLICT,
            Self::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<ProviderError> for ServiceError {
    fn from(e: ProviderError) -> Self {
        Self::Unavailable(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if matches!(self, Self::Internal(_)) {
            log::error!("{self}");
        }
        (self.status(), Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

/// Shared state: the read-only retrieval engine, the session store and an
/// optional text embedding provider.
pub struct AppState {
    pub retrieval: Retrieval,
    pub sessions: SessionStore,
    pub provider: Option<Arc<dyn EmbeddingProvider>>,
}

impl AppState {
    pub fn new(retrieval: Retrieval, provider: Option<Arc<dyn EmbeddingProvider>>) -> Self {
        Self {
            retrieval,
            sessions: SessionStore::default(),
            provider,
        }
    }

    pub fn with_sessions(mut self, sessions: SessionStore) -> Self {
        self.sessions = sessions;
        self
    }
}
