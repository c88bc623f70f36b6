//! Temporal-aware video encoder, dialogue-query encoder, query-conditioned
//! attentive pooling and dot-product scoring over precomputed embeddings.

pub mod checkpoint;
pub mod config;
pub mod forward;
pub mod params;
pub mod records;

use thiserror::Error;

pub use config::{DialogueMode, Fusion, InitScheme, ModelConfig, Similarity};
pub use forward::Forward;
pub use params::ModelParams;
pub use records::{DialogueQuery, PooledScore, VideoRecord};

use crate::autograd::{Graph, Var};
use crate::embedding::EmbeddingMatrix;
use crate::tensor::{Tensor, TensorError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("video has {frames} frames but the model supports at most {max}; subsample the video or retrain with a larger max_frames")]
    TooManyFrames { frames: usize, max: usize },
    #[error("embedding dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dialogue mode mismatch: model was built for {expected}, query is {got}")]
    ModeMismatch { expected: DialogueMode, got: DialogueMode },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("requested {requested} dialogue rounds but only {available} are available")]
    RoundsOutOfRange { requested: usize, available: usize },
}

impl ModelParams {
    fn with_graph<R>(
        &self,
        f: impl FnOnce(&mut Graph, &Forward<'_>) -> Result<R, ModelError>,
    ) -> Result<R, ModelError> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let fwd = Forward {
            config: &self.config,
            weights: &bound,
        };
        f(&mut g, &fwd)
    }

    pub(crate) fn check_mode(&self, query: &DialogueQuery) -> Result<(), ModelError> {
        if query.mode != self.config.dialogue_mode {
            return Err(ModelError::ModeMismatch {
                expected: self.config.dialogue_mode,
                got: query.mode,
            });
        }
        Ok(())
    }

    pub fn inject_positions(&self, frames: &EmbeddingMatrix) -> Result<Tensor, ModelError> {
        let frames = frames.to_tensor()?;
        self.with_graph(|g, fwd| {
            let x = g.constant(frames);
            let out = fwd.inject_positions(g, x)?;
            Ok(g.value(out).clone())
        })
    }

    /// Temporal frame representations `f^{h'}` (`n × d`).
    pub fn encode_frames(&self, video: &VideoRecord) -> Result<Tensor, ModelError> {
        let frames = video.frames.to_tensor()?;
        self.with_graph(|g, fwd| {
            let x = g.constant(frames);
            let out = fwd.encode_frames(g, x)?;
            Ok(g.value(out).clone())
        })
    }

    /// Dialogue states `d_1^h .. d_m^h` (`m × d`).
    pub fn encode_dialogue(&self, query: &DialogueQuery) -> Result<Tensor, ModelError> {
        self.check_mode(query)?;
        let turns = query.turns.to_tensor()?;
        self.with_graph(|g, fwd| {
            let x = g.constant(turns);
            let out = fwd.encode_dialogue(g, x)?;
            Ok(g.value(out).clone())
        })
    }

    /// `D^h` from already encoded dialogue states.
    pub fn fuse_dialogue(&self, states: &Tensor) -> Result<Tensor, ModelError> {
        self.with_graph(|g, fwd| {
            let x = g.constant(states.clone());
            let out = fwd.fuse_dialogue(g, x)?;
            Ok(g.value(out).clone())
        })
    }

    /// `D^h` for a dialogue query (`1 × d`).
    pub fn query_representation(&self, query: &DialogueQuery) -> Result<Tensor, ModelError> {
        self.check_mode(query)?;
        let turns = query.turns.to_tensor()?;
        self.query_representation_from_turns(&turns)
    }

    /// `D^h` from raw turn rows, bypassing the mode check.
    pub fn query_representation_from_turns(&self, turns: &Tensor) -> Result<Tensor, ModelError> {
        self.with_graph(|g, fwd| {
            let x = g.constant(turns.clone());
            let out = fwd.query_representation(g, x)?;
            Ok(g.value(out).clone())
        })
    }

    /// Attentive pooling of temporal frames conditioned on `D^h`.
    pub fn pool_video(&self, query_rep: &Tensor, temporal: &Tensor) -> Result<PooledScore, ModelError> {
        if query_rep.rows() != 1 {
            return Err(ModelError::Tensor(TensorError::ShapeMismatch {
                op: "pool_video",
                left: query_rep.shape(),
                right: [1, self.config.dim],
            }));
        }
        self.with_graph(|g, fwd| {
            let q = g.constant(query_rep.clone());
            let t = g.constant(temporal.clone());
            let pooled = fwd.pool(g, q, t)?;
            Ok(PooledScore {
                query_rep: query_rep.data().to_vec(),
                video_rep: g.value(pooled.video_reps).data().to_vec(),
                weights: g.value(pooled.weights).data().to_vec(),
                score: g.value(pooled.scores).item(),
            })
        })
    }

    /// Scores precomputed query representations (`Q × d`) against
    /// precomputed temporal frame matrices.
    pub fn score_representations(&self, query_reps: &Tensor, temporal: &[Tensor]) -> Result<Tensor, ModelError> {
        self.with_graph(|g, fwd| {
            let q = g.constant(query_reps.clone());
            let ts: Vec<Var> = temporal.iter().map(|t| g.constant(t.clone())).collect();
            let s = fwd.score_matrix(g, q, &ts)?;
            Ok(g.value(s).clone())
        })
    }

    /// Stacked `D^h` rows for a list of queries.
    pub fn query_representations(&self, queries: &[DialogueQuery]) -> Result<Tensor, ModelError> {
        if queries.is_empty() {
            return Err(ModelError::Empty("no queries"));
        }
        let mut rows = Vec::with_capacity(queries.len());
        for q in queries {
            rows.push(self.query_representation(q)?.into_data());
        }
        Ok(Tensor::from_rows(&rows)?)
    }

    /// `Q × V` matrix of dialogue-to-video scores.
    pub fn score_matrix(&self, queries: &[DialogueQuery], videos: &[VideoRecord]) -> Result<Tensor, ModelError> {
        if videos.is_empty() {
            return Err(ModelError::Empty("no videos"));
        }
        let reps = self.query_representations(queries)?;
        let temporal = videos
            .iter()
            .map(|v| self.encode_frames(v))
            .collect::<Result<Vec<_>, _>>()?;
        self.score_representations(&reps, &temporal)
    }
}

#[cfg(test)]
mod tests;
