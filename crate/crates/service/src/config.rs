//! Service configuration from the environment and startup.

use std::env;
use std::path::PathBuf;
use std::sync::Arc;

use dtv_core::ModelParams;

use crate::provider::{EmbeddingProvider, HttpProvider};
use crate::{AppState, Index, Retrieval, SessionStore};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_MAX_TURNS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub checkpoint: PathBuf,
    pub index: PathBuf,
    pub embed_provider_url: Option<String>,
    pub port: u16,
    pub max_turns: usize,
    pub session_snapshot: Option<PathBuf>,
}

impl ServiceConfig {
    /// Reads `DTV_CHECKPOINT`, `DTV_INDEX`, `DTV_EMBED_PROVIDER_URL`,
    /// `DTV_PORT`, `DTV_MAX_TURNS` and `DTV_SESSION_SNAPSHOT`.
    pub fn from_env() -> Result<Self, String> {
        let required = |name: &str| env::var(name).map_err(|_| format!("{name} is not set"));
        let parsed = |name: &str, default: usize| -> Result<usize, String> {
            match env::var(name) {
                Ok(v) => v.parse().map_err(|_| format!("{name}={v:?} is not a number")),
                Err(_) => Ok(default),
            }
        };
        Ok(Self {
            checkpoint: required("DTV_CHECKPOINT")?.into(),
            index: required("DTV_INDEX")?.into(),
            embed_provider_url: env::var("DTV_EMBED_PROVIDER_URL").ok().filter(|s| !s.is_empty()),
            port: u16::try_from(parsed("DTV_PORT", DEFAULT_PORT as usize)?).map_err(|_| "DTV_PORT out of range")?,
            max_turns: parsed("DTV_MAX_TURNS", DEFAULT_MAX_TURNS)?,
            session_snapshot: env::var("DTV_SESSION_SNAPSHOT").ok().filter(|s| !s.is_empty()).map(PathBuf::from),
        })
    }

    /// Loads the checkpoint and index and checks they belong together.
    pub fn load_state(&self) -> Result<AppState, Box<dyn std::error::Error + Send + Sync>> {
        let params = ModelParams::load(&self.checkpoint)
            .map_err(|e| format!("loading checkpoint {}: {e}", self.checkpoint.display()))?;
        let index = Index::load(&self.index).map_err(|e| format!("loading index {}: {e}", self.index.display()))?;
        let retrieval = Retrieval::new(params, index, self.max_turns)?;
        let provider = self
            .embed_provider_url
            .as_ref()
            .map(|url| Arc::new(HttpProvider::new(url.clone())) as Arc<dyn EmbeddingProvider>);
        let sessions = match &self.session_snapshot {
            Some(path) => SessionStore::restore(path.clone())?,
            None => SessionStore::default(),
        };
        Ok(AppState::new(retrieval, provider).with_sessions(sessions))
    }
}

/// Binds `0.0.0.0:port` and serves until Ctrl-C.
pub async fn serve(state: AppState, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, crate::router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
