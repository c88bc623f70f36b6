//! HTTP routes.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use dtv_core::DialogueMode;
use serde::{Deserialize, Serialize};

use crate::engine::RankedVideo;
use crate::session::{Session, SessionHandle};
use crate::{AppState, ServiceError};

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<Json<T>, ServiceError>;

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub mode: DialogueMode,
    pub max_turns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub mode: DialogueMode,
    pub created_at: u64,
    pub turn_count: usize,
    pub max_turns: usize,
    pub texts: Vec<Option<String>>,
}

/// Exactly one of `text` or `embedding`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnAccepted {
    pub session_id: String,
    /// 1-based round number of the turn just added.
    pub turn_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResponse {
    pub session_id: String,
    pub turn_count: usize,
    pub k: usize,
    pub results: Vec<RankedVideo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionResponse {
    pub session_id: String,
    pub video_id: String,
    pub turn_count: usize,
    /// Per-frame pooling weights; they sum to 1.
    pub weights: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub videos: usize,
    pub dim: usize,
    pub mode: DialogueMode,
    pub checkpoint: String,
    pub text_turns: bool,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info).delete(delete_session))
        .route("/sessions/{id}/turns", post(post_turn))
        .route("/sessions/{id}/ranking", get(ranking))
        .route("/sessions/{id}/attention/{video_id}", get(attention))
        .with_state(state)
}

async fn health(State(s): Shared) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        videos: s.retrieval.index.len(),
        dim: s.retrieval.dim(),
        mode: s.retrieval.params.config.dialogue_mode,
        checkpoint: s.retrieval.index.fingerprint.clone(),
        text_turns: s.provider.is_some(),
    })
}

async fn lookup(s: &AppState, id: &str) -> Result<SessionHandle, ServiceError> {
    s.sessions
        .get(id)
        .await
        .ok_or_else(|| ServiceError::NotFound(format!("unknown session {id}")))
}

async fn persist(s: &AppState) {
    if let Err(e) = s.sessions.persist().await {
        log::warn!("session snapshot failed: {e}");
    }
}

async fn create_session(State(s): Shared) -> (StatusCode, Json<SessionCreated>) {
    let session = Session::new(s.retrieval.params.config.dialogue_mode);
    let id = s.sessions.insert(session.clone()).await;
    persist(&s).await;
    (
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: id,
            mode: session.mode,
            max_turns: s.retrieval.max_turns,
        }),
    )
}

async fn session_info(State(s): Shared, Path(id): Path<String>) -> ApiResult<SessionInfo> {
    let handle = lookup(&s, &id).await?;
    let session = handle.lock().await;
    Ok(Json(SessionInfo {
        session_id: session.session_id.clone(),
        mode: session.mode,
        created_at: session.created_at,
        turn_count: session.num_turns(),
        max_turns: s.retrieval.max_turns,
        texts: session.texts.clone(),
    }))
}

async fn delete_session(State(s): Shared, Path(id): Path<String>) -> Result<StatusCode, ServiceError> {
    if !s.sessions.remove(&id).await {
        return Err(ServiceError::NotFound(format!("unknown session {id}")));
    }
    persist(&s).await;
    Ok(StatusCode::NO_CONTENT)
}

fn parse_turn(body: &[u8], dim: usize) -> Result<TurnRequest, ServiceError> {
    let req: TurnRequest =
        serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("malformed turn: {e}")))?;
    match (&req.text, &req.embedding) {
        (Some(_), Some(_)) | (None, None) => Err(ServiceError::BadRequest(
            "malformed turn: provide exactly one of \"text\" or \"embedding\"".into(),
        )),
        (Some(t), None) if t.trim().is_empty() => Err(ServiceError::BadRequest("malformed turn: empty text".into())),
        (None, Some(e)) if e.len() != dim => Err(ServiceError::BadRequest(format!(
            "malformed turn: embedding has {} values, expected {dim}",
            e.len()
        ))),
        (None, Some(e)) if e.iter().any(|v| !v.is_finite()) => Err(ServiceError::BadRequest(
            "malformed turn: embedding contains non-finite values".into(),
        )),
        _ => Ok(req),
    }
}

/// The embedding row for a text turn: the turn alone in per-turn mode, or
/// the whole transcript so far in cumulative-prefix mode.
async fn embed_text(s: &AppState, session: &Session, text: &str) -> Result<Vec<f64>, ServiceError> {
    let provider = s
        .provider
        .as_ref()
        .ok_or_else(|| ServiceError::Unavailable("no embedding provider configured for text turns".into()))?;
    let input = match session.mode {
        DialogueMode::PerTurn => text.to_string(),
        DialogueMode::CumulativePrefix => {
            let mut parts = Vec::with_capacity(session.texts.len() + 1);
            for t in &session.texts {
                parts.push(t.as_deref().ok_or_else(|| {
                    ServiceError::BadRequest(
                        "cumulative-prefix sessions cannot mix text turns after embedding turns".into(),
                    )
                })?);
            }
            parts.push(text);
            parts.join("\n")
        }
    };
    let mut out = provider.embed(&[input]).await?;
    let row = out.pop().unwrap_or_default();
    if row.len() != s.retrieval.dim() {
        return Err(ServiceError::Unavailable(format!(
            "embedding provider returned {} values, expected {}",
            row.len(),
            s.retrieval.dim()
        )));
    }
    Ok(row.into_iter().map(f64::from).collect())
}

async fn post_turn(State(s): Shared, Path(id): Path<String>, body: Bytes) -> Result<(StatusCode, Json<TurnAccepted>), ServiceError> {
    let handle = lookup(&s, &id).await?;
    let req = parse_turn(&body, s.retrieval.dim())?;
    let accepted = {
        let mut session = handle.lock().await;
        if session.num_turns() >= s.retrieval.max_turns {
            return Err(ServiceError::TurnLimit(format!(
                "session already has the maximum of {} turns",
                s.retrieval.max_turns
            )));
        }
        let row = match (&req.text, req.embedding) {
            (Some(text), _) => embed_text(&s, &session, text).await?,
            (None, Some(e)) => e,
            (None, None) => unreachable!("validated by parse_turn"),
        };
        let turn_index = session.push_turn(row, req.text);
        let rep = s.retrieval.query_rep(&session.turns)?;
        session.query_rep = Some(rep);
        TurnAccepted {
            session_id: id,
            turn_index,
        }
    };
    persist(&s).await;
    Ok((StatusCode::CREATED, Json(accepted)))
}

async fn current_rep(s: &AppState, session: &mut Session) -> Result<Vec<f64>, ServiceError> {
    if session.turns.is_empty() {
        return Err(ServiceError::BadRequest("at least one turn required".into()));
    }
    if session.query_rep.is_none() {
        session.query_rep = Some(s.retrieval.query_rep(&session.turns)?);
    }
    Ok(session.query_rep.clone().expect("just computed"))
}

/// `k` from the query string; defaults to 10, must be a positive integer.
fn parse_k(query: Option<&str>) -> Result<usize, ServiceError> {
    let mut k = DEFAULT_K;
    for pair in query.unwrap_or("").split('&').filter(|p| !p.is_empty()) {
        let (key, value) = pair.split_once('=').unwrap_or((pair, ""));
        if key == "k" {
            k = value
                .parse()
                .map_err(|_| ServiceError::BadRequest(format!("k must be a positive integer, got {value:?}")))?;
        }
    }
    if k == 0 {
        return Err(ServiceError::BadRequest("k must be at least 1".into()));
    }
    Ok(k)
}

async fn ranking(
    State(s): Shared,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
) -> ApiResult<RankingResponse> {
    let handle = lookup(&s, &id).await?;
    let k = parse_k(query.as_deref())?;
    let mut session = handle.lock().await;
    let rep = current_rep(&s, &mut session).await?;
    let results = s.retrieval.rank(&rep, k)?;
    Ok(Json(RankingResponse {
        session_id: id,
        turn_count: session.num_turns(),
        k,
        results,
    }))
}

async fn attention(State(s): Shared, Path((id, video_id)): Path<(String, String)>) -> ApiResult<AttentionResponse> {
    let handle = lookup(&s, &id).await?;
    let mut session = handle.lock().await;
    let rep = current_rep(&s, &mut session).await?;
    let pooled = s.retrieval.attention(&rep, &video_id)?;
    Ok(Json(AttentionResponse {
        session_id: id,
        video_id,
        turn_count: session.num_turns(),
        weights: pooled.weights,
        score: pooled.score,
    }))
}
