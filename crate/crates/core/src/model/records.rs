use serde::{Deserialize, Serialize};

use super::config::DialogueMode;
use super::ModelError;
use crate::embedding::EmbeddingMatrix;

/// A video as its `n × d` frame embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub video_id: String,
    pub frames: EmbeddingMatrix,
}

impl VideoRecord {
    pub fn new(video_id: impl Into<String>, frames: EmbeddingMatrix) -> Result<Self, ModelError> {
        if frames.rows() == 0 {
            return Err(ModelError::Empty("video has no frames"));
        }
        Ok(Self {
            video_id: video_id.into(),
            frames,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }

    /// Uniformly subsamples to at most `max_frames` rows (row `i` of the
    /// result is source row `floor(i * n / max_frames)`).
    pub fn subsampled(&self, max_frames: usize) -> Self {
        let n = self.frames.rows();
        if n <= max_frames {
            return self.clone();
        }
        let picks: Vec<usize> = (0..max_frames).map(|i| i * n / max_frames).collect();
        Self {
            video_id: self.video_id.clone(),
            frames: self.frames.select_rows(&picks),
        }
    }
}

/// A dialogue query as `m × d` turn embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct DialogueQuery {
    pub query_id: String,
    pub turns: EmbeddingMatrix,
    pub mode: DialogueMode,
}

impl DialogueQuery {
    pub fn new(
        query_id: impl Into<String>,
        turns: EmbeddingMatrix,
        mode: DialogueMode,
    ) -> Result<Self, ModelError> {
        if turns.rows() == 0 {
            return Err(ModelError::Empty("dialogue has no turns"));
        }
        Ok(Self {
            query_id: query_id.into(),
            turns,
            mode,
        })
    }

    pub fn num_turns(&self) -> usize {
        self.turns.rows()
    }

    /// The query as it stood after its first `rounds` turns.
    pub fn truncated(&self, rounds: usize) -> Result<Self, ModelError> {
        if rounds == 0 || rounds > self.turns.rows() {
            return Err(ModelError::RoundsOutOfRange {
                requested: rounds,
                available: self.turns.rows(),
            });
        }
        Ok(Self {
            query_id: self.query_id.clone(),
            turns: self.turns.head(rounds),
            mode: self.mode,
        })
    }
}

/// Result of query-conditioned pooling for one (query, video) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledScore {
    /// Dialogue representation `D^h`.
    pub query_rep: Vec<f64>,
    /// Pooled video representation `V^h`.
    pub video_rep: Vec<f64>,
    /// Per-frame pooling weights.
    pub weights: Vec<f64>,
    pub score: f64,
}
