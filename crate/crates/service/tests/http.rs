use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use dtv_core::corpus::{generate_synthetic, Split, SplitData, SyntheticConfig};
use dtv_core::model::{InitScheme, ModelConfig, ModelParams};
use dtv_core::DialogueMode;
use dtv_service::api::{AttentionResponse, RankingResponse, SessionCreated, SessionInfo, TurnAccepted};
use dtv_service::{AppState, EmbeddingProvider, HashingStub, HttpProvider, Index, IndexError, Retrieval, SessionStore};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    params: ModelParams,
    split: SplitData,
    index: Index,
}

fn fixture(mode: DialogueMode) -> Fixture {
    let cfg = SyntheticConfig {
        num_videos: [4, 4, 12],
        turns: 4,
        dim: 8,
        latent_dim: 8,
        frames: 5,
        turn_fractions: vec![0.25; 4],
        mode,
        ..SyntheticConfig::default()
    };
    let corpus = generate_synthetic(&cfg, 3).unwrap();
    let part = corpus.split(Split::Test);
    let split = SplitData::from_records(&part.videos, &part.dialogues, mode, None).unwrap();
    let mut mc = ModelConfig::new(8);
    mc.heads = 2;
    mc.max_frames = 8;
    mc.dialogue_mode = mode;
    let params = ModelParams::init(mc, InitScheme::Random, 9).unwrap();
    let index = Index::build(&params, &split.videos).unwrap();
    Fixture { params, split, index }
}

fn app(f: &Fixture, provider: Option<Arc<dyn EmbeddingProvider>>) -> Router {
    let retrieval = Retrieval::new(f.params.clone(), f.index.clone(), 4).unwrap();
    dtv_service::router(Arc::new(AppState::new(retrieval, provider)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn raw_post(app: &Router, uri: &str, body: &'static str) -> StatusCode {
    let req = Request::builder()
        .method("POST")
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    app.clone().oneshot(req).await.unwrap().status()
}

async fn new_session(app: &Router) -> String {
    let (status, body) = call(app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    serde_json::from_value::<SessionCreated>(body).unwrap().session_id
}

fn turn_row(f: &Fixture, q: usize, t: usize) -> Vec<f64> {
    f.split.queries[q].turns.row(t).iter().map(|&v| f64::from(v)).collect()
}

#[tokio::test]
async fn ranking_matches_offline_scoring_after_each_turn() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, None);
    for q in 0..3 {
        let id = new_session(&app).await;
        for r in 1..=4 {
            let (status, body) = call(
                &app,
                "POST",
                &format!("/sessions/{id}/turns"),
                Some(json!({ "embedding": turn_row(&f, q, r - 1) })),
            )
            .await;
            assert_eq!(status, StatusCode::CREATED);
            assert_eq!(serde_json::from_value::<TurnAccepted>(body).unwrap().turn_index, r);

            let (status, body) = call(&app, "GET", &format!("/sessions/{id}/ranking?k=100"), None).await;
            assert_eq!(status, StatusCode::OK);
            let ranking: RankingResponse = serde_json::from_value(body).unwrap();
            assert_eq!(ranking.turn_count, r);
            assert_eq!(ranking.results.len(), f.index.len());

            let query = f.split.queries[q].truncated(r).unwrap();
            let offline = f.params.score_matrix(&[query], &f.split.videos).unwrap();
            for item in &ranking.results {
                let col = f.split.videos.iter().position(|v| v.video_id == item.video_id).unwrap();
                assert!((item.score - offline.get(0, col)).abs() <= 1e-6);
            }
            for w in ranking.results.windows(2) {
                assert!(w[0].score >= w[1].score);
                assert_eq!(w[1].rank, w[0].rank + 1);
            }
        }
    }
}

#[tokio::test]
async fn default_k_and_explicit_k() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, None);
    let id = new_session(&app).await;
    call(&app, "POST", &format!("/sessions/{id}/turns"), Some(json!({ "embedding": turn_row(&f, 0, 0) }))).await;
    let (_, body) = call(&app, "GET", &format!("/sessions/{id}/ranking"), None).await;
    assert_eq!(body["results"].as_array().unwrap().len(), 10);
    let (_, body) = call(&app, "GET", &format!("/sessions/{id}/ranking?k=3"), None).await;
    assert_eq!(body["results"].as_array().unwrap().len(), 3);
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/ranking?k=0"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/ranking?k=abc"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn ranking_before_any_turn_is_rejected() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, None);
    let id = new_session(&app).await;
    let (status, body) = call(&app, "GET", &format!("/sessions/{id}/ranking"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("at least one turn required"));
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/attention/{}", f.index.video_ids[0]), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn attention_weights_are_normalized_and_match_pooling() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, None);
    let id = new_session(&app).await;
    for t in 0..2 {
        call(&app, "POST", &format!("/sessions/{id}/turns"), Some(json!({ "embedding": turn_row(&f, 1, t) }))).await;
    }
    let (_, ranking) = call(&app, "GET", &format!("/sessions/{id}/ranking?k=100"), None).await;
    let ranking: RankingResponse = serde_json::from_value(ranking).unwrap();
    for item in &ranking.results {
        let (status, body) = call(&app, "GET", &format!("/sessions/{id}/attention/{}", item.video_id), None).await;
        assert_eq!(status, StatusCode::OK);
        let att: AttentionResponse = serde_json::from_value(body).unwrap();
        assert_eq!(att.weights.len(), 5);
        assert!((att.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        assert!((att.score - item.score).abs() <= 1e-12);
    }
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/attention/nope"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn unknown_and_deleted_sessions_are_404() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, None);
    let (status, _) = call(&app, "GET", "/sessions/missing/ranking", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", "/sessions/missing/turns", Some(json!({ "embedding": [0.0] }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = new_session(&app).await;
    let (status, info) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_value::<SessionInfo>(info).unwrap().turn_count, 0);
    let (status, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/ranking"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_turns_are_400() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, Some(Arc::new(HashingStub::new(8))));
    let id = new_session(&app).await;
    let uri = format!("/sessions/{id}/turns");
    for body in [
        json!({}),
        json!({ "text": "hi", "embedding": vec![0.0; 8] }),
        json!({ "embedding": vec![0.0; 7] }),
        json!({ "text": "   " }),
        json!({ "text": "a", "extra": 1 }),
        json!({ "embedding": "nope" }),
    ] {
        let (status, body) = call(&app, "POST", &uri, Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert!(body["error"].is_string());
    }
    assert_eq!(raw_post(&app, &uri, "{not json").await, StatusCode::BAD_REQUEST);
    let (_, info) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(info["turn_count"], 0);
}

#[tokio::test]
async fn turn_limit_is_409() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, None);
    let id = new_session(&app).await;
    let uri = format!("/sessions/{id}/turns");
    for t in 0..4 {
        let (status, _) = call(&app, "POST", &uri, Some(json!({ "embedding": turn_row(&f, 0, t) }))).await;
        assert_eq!(status, StatusCode::CREATED);
    }
    let (status, _) = call(&app, "POST", &uri, Some(json!({ "embedding": turn_row(&f, 0, 0) }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn text_without_provider_is_503() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, None);
    let id = new_session(&app).await;
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/turns"), Some(json!({ "text": "a man cooks" }))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn unreachable_provider_is_503() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, Some(Arc::new(HttpProvider::new("http://127.0.0.1:9"))));
    let id = new_session(&app).await;
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/turns"), Some(json!({ "text": "hello" }))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn text_turns_use_the_provider_per_mode() {
    let stub = HashingStub::new(8);
    let to64 = |v: Vec<f32>| v.into_iter().map(f64::from).collect::<Vec<f64>>();
    for (mode, rows) in [
        (DialogueMode::PerTurn, vec![to64(stub.embed_one("q1 a1")), to64(stub.embed_one("q2 a2"))]),
        (
            DialogueMode::CumulativePrefix,
            vec![to64(stub.embed_one("q1 a1")), to64(stub.embed_one("q1 a1\nq2 a2"))],
        ),
    ] {
        let f = fixture(mode);
        let text_app = app(&f, Some(Arc::new(stub.clone())));
        let emb_app = app(&f, None);
        let a = new_session(&text_app).await;
        let b = new_session(&emb_app).await;
        for (text, row) in ["q1 a1", "q2 a2"].iter().zip(&rows) {
            call(&text_app, "POST", &format!("/sessions/{a}/turns"), Some(json!({ "text": text }))).await;
            call(&emb_app, "POST", &format!("/sessions/{b}/turns"), Some(json!({ "embedding": row }))).await;
        }
        let (_, ra) = call(&text_app, "GET", &format!("/sessions/{a}/ranking?k=5"), None).await;
        let (_, rb) = call(&emb_app, "GET", &format!("/sessions/{b}/ranking?k=5"), None).await;
        assert_eq!(ra["results"], rb["results"], "{mode}");
        let (_, info) = call(&text_app, "GET", &format!("/sessions/{a}"), None).await;
        assert_eq!(info["texts"], json!(["q1 a1", "q2 a2"]));
    }
}

#[tokio::test]
async fn prefix_mode_rejects_text_after_embedding_turns() {
    let f = fixture(DialogueMode::CumulativePrefix);
    let app = app(&f, Some(Arc::new(HashingStub::new(8))));
    let id = new_session(&app).await;
    let uri = format!("/sessions/{id}/turns");
    call(&app, "POST", &uri, Some(json!({ "embedding": turn_row(&f, 0, 0) }))).await;
    let (status, _) = call(&app, "POST", &uri, Some(json!({ "text": "more" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn interleaved_sessions_equal_serial_sessions() {
    let f = fixture(DialogueMode::PerTurn);
    let shared = app(&f, None);
    let (a, b) = (new_session(&shared).await, new_session(&shared).await);
    for t in 0..3 {
        call(&shared, "POST", &format!("/sessions/{a}/turns"), Some(json!({ "embedding": turn_row(&f, 0, t) }))).await;
        call(&shared, "POST", &format!("/sessions/{b}/turns"), Some(json!({ "embedding": turn_row(&f, 5, t) }))).await;
    }
    for (id, q) in [(a, 0), (b, 5)] {
        let solo = app(&f, None);
        let s = new_session(&solo).await;
        for t in 0..3 {
            call(&solo, "POST", &format!("/sessions/{s}/turns"), Some(json!({ "embedding": turn_row(&f, q, t) }))).await;
        }
        let (_, x) = call(&shared, "GET", &format!("/sessions/{id}/ranking?k=100"), None).await;
        let (_, y) = call(&solo, "GET", &format!("/sessions/{s}/ranking?k=100"), None).await;
        assert_eq!(x["results"], y["results"]);
    }
}

#[tokio::test]
async fn concurrent_turns_on_distinct_sessions() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, None);
    let mut ids = Vec::new();
    for _ in 0..8 {
        ids.push(new_session(&app).await);
    }
    let mut tasks = Vec::new();
    for (q, id) in ids.iter().enumerate() {
        let app = app.clone();
        let rows: Vec<Vec<f64>> = (0..4).map(|t| turn_row(&f, q, t)).collect();
        let id = id.clone();
        tasks.push(tokio::spawn(async move {
            for row in rows {
                let (s, _) = call(&app, "POST", &format!("/sessions/{id}/turns"), Some(json!({ "embedding": row }))).await;
                assert_eq!(s, StatusCode::CREATED);
            }
            call(&app, "GET", &format!("/sessions/{id}/ranking?k=100"), None).await.1
        }));
    }
    for (q, task) in tasks.into_iter().enumerate() {
        let ranking: RankingResponse = serde_json::from_value(task.await.unwrap()).unwrap();
        let offline = f.params.score_matrix(&f.split.queries[q..=q], &f.split.videos).unwrap();
        for item in &ranking.results {
            let col = f.index.position(&item.video_id).unwrap();
            assert!((item.score - offline.get(0, col)).abs() <= 1e-6);
        }
    }
}

#[test]
fn index_build_is_idempotent_and_round_trips() {
    let f = fixture(DialogueMode::PerTurn);
    let again = Index::build(&f.params, &f.split.videos).unwrap();
    assert_eq!(f.index.to_bytes(), again.to_bytes());
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.dtvi"), dir.path().join("b.dtvi"));
    f.index.save(&p1).unwrap();
    again.save(&p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(Index::load(&p1).unwrap(), f.index);
    assert_eq!(&std::fs::read(&p1).unwrap()[..4], b"DTVI");
}

#[test]
fn index_rejects_other_checkpoints_and_corruption() {
    let f = fixture(DialogueMode::PerTurn);
    let other = ModelParams::init(f.params.config.clone(), InitScheme::Random, 10).unwrap();
    assert!(matches!(
        Retrieval::new(other, f.index.clone(), 4),
        Err(IndexError::StaleCheckpoint { .. })
    ));
    let mut bytes = f.index.to_bytes();
    assert!(matches!(
        Index::from_bytes(&bytes[..bytes.len() - 1]),
        Err(IndexError::Truncated(_))
    ));
    bytes[0] = b'X';
    assert!(matches!(Index::from_bytes(&bytes), Err(IndexError::BadMagic(_))));
}

#[tokio::test]
async fn sessions_survive_a_snapshot_restore() {
    let f = fixture(DialogueMode::PerTurn);
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("sessions.json");
    let make = || {
        let retrieval = Retrieval::new(f.params.clone(), f.index.clone(), 4).unwrap();
        let state = AppState::new(retrieval, None).with_sessions(SessionStore::restore(snap.clone()).unwrap());
        dtv_service::router(Arc::new(state))
    };
    let first = make();
    let id = new_session(&first).await;
    for t in 0..2 {
        call(&first, "POST", &format!("/sessions/{id}/turns"), Some(json!({ "embedding": turn_row(&f, 2, t) }))).await;
    }
    let (_, before) = call(&first, "GET", &format!("/sessions/{id}/ranking?k=100"), None).await;
    drop(first);
    let second = make();
    let (status, after) = call(&second, "GET", &format!("/sessions/{id}/ranking?k=100"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
}

#[tokio::test]
async fn http_provider_talks_to_an_embed_endpoint() {
    use axum::routing::post;
    use axum::Json;

    async fn embed(Json(body): Json<Value>) -> Json<Value> {
        let stub = HashingStub::new(8);
        let texts: Vec<String> = serde_json::from_value(body["texts"].clone()).unwrap();
        Json(json!({ "embeddings": texts.iter().map(|t| stub.embed_one(t)).collect::<Vec<_>>() }))
    }
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, Router::new().route("/embed", post(embed))).await.unwrap();
    });
    let provider = HttpProvider::new(format!("http://{addr}/"));
    let texts = vec!["one".to_string(), "two".to_string()];
    let got = provider.embed(&texts).await.unwrap();
    let stub = HashingStub::new(8);
    assert_eq!(got, vec![stub.embed_one("one"), stub.embed_one("two")]);
}

#[tokio::test]
async fn health_reports_index() {
    let f = fixture(DialogueMode::PerTurn);
    let app = app(&f, None);
    let (status, body) = call(&app, "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["videos"], 12);
    assert_eq!(body["checkpoint"], f.params.fingerprint());
}
