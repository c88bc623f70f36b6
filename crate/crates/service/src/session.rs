//! In-memory dialogue sessions with optional JSON snapshots.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use dtv_core::DialogueMode;
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub mode: DialogueMode,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    /// One embedding row per posted turn, in the session's dialogue mode.
    pub turns: Vec<Vec<f64>>,
    /// Raw text of each turn, when it was posted as text.
    pub texts: Vec<Option<String>>,
    /// Cached `D^h`; cleared whenever a turn is added.
    #[serde(skip)]
    pub query_rep: Option<Vec<f64>>,
}

impl Session {
    pub fn new(mode: DialogueMode) -> Self {
        Self {
            session_id: uuid::Uuid::new_v4().to_string(),
            mode,
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            turns: Vec::new(),
            texts: Vec::new(),
            query_rep: None,
        }
    }

    pub fn num_turns(&self) -> usize {
        self.turns.len()
    }

    pub fn push_turn(&mut self, row: Vec<f64>, text: Option<String>) -> usize {
        self.turns.push(row);
        self.texts.push(text);
        self.query_rep = None;
        self.turns.len()
    }
}

pub type SessionHandle = Arc<Mutex<Session>>;

/// Sessions keyed by id. The map lock is held only for lookups; each
/// session has its own lock so distinct sessions proceed concurrently.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, SessionHandle>>,
    snapshot: Option<PathBuf>,
}

impl SessionStore {
    pub fn new(snapshot: Option<PathBuf>) -> Self {
        Self {
            sessions: RwLock::default(),
            snapshot,
        }
    }

    /// Restores sessions from a snapshot file if one exists.
    pub fn restore(snapshot: PathBuf) -> std::io::Result<Self> {
        let mut map = HashMap::new();
        if snapshot.exists() {
            let text = std::fs::read_to_string(&snapshot)?;
            let sessions: Vec<Session> = serde_json::from_str(&text)?;
            for s in sessions {
                map.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
            }
        }
        Ok(Self {
            sessions: RwLock::new(map),
            snapshot: Some(snapshot),
        })
    }

    pub async fn insert(&self, session: Session) -> String {
        let id = session.session_id.clone();
        self.sessions.write().await.insert(id.clone(), Arc::new(Mutex::new(session)));
        id
    }

    pub async fn get(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().await.get(id).cloned()
    }

    pub async fn remove(&self, id: &str) -> bool {
        self.sessions.write().await.remove(id).is_some()
    }

    pub async fn len(&self) -> usize {
        self.sessions.read().await.len()
    }

    pub async fn is_empty(&self) -> bool {
        self.len().await == 0
    }

    /// Writes every session to the snapshot file, sorted by id. Call with
    /// no session lock held.
    pub async fn persist(&self) -> std::io::Result<()> {
        let Some(path) = &self.snapshot else {
            return Ok(());
        };
        let handles: Vec<SessionHandle> = self.sessions.read().await.values().cloned().collect();
        let mut sessions = Vec::with_capacity(handles.len());
        for h in handles {
            sessions.push(h.lock().await.clone());
        }
        sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(&sessions)?)?;
        std::fs::rename(tmp, path)
    }
}
