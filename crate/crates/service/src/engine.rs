//! Scoring against a loaded checkpoint and index. Uses exactly the model
//! calls batch evaluation uses, so online and offline scores agree.

use dtv_core::eval::rank_videos;
use dtv_core::model::{ModelParams, PooledScore};
use dtv_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::index::{Index, IndexError};
use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedVideo {
    pub rank: usize,
    pub video_id: String,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct Retrieval {
    pub params: ModelParams,
    pub index: Index,
    pub max_turns: usize,
}

impl Retrieval {
    pub fn new(params: ModelParams, index: Index, max_turns: usize) -> Result<Self, IndexError> {
        index.check_checkpoint(&params)?;
        if index.is_empty() {
            return Err(IndexError::Malformed("index holds no videos".into()));
        }
        Ok(Self {
            params,
            index,
            max_turns,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.config.dim
    }

    /// `D^h` (length `d`) from the turn rows posted so far.
    pub fn query_rep(&self, turns: &[Vec<f64>]) -> Result<Vec<f64>, ServiceError> {
        let t = Tensor::from_rows(turns).map_err(|e| ServiceError::Internal(e.to_string()))?;
        let rep = self
            .params
            .query_representation_from_turns(&t)
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        Ok(rep.into_data())
    }

    /// Scores against every indexed video, in index order.
    pub fn scores(&self, rep: &[f64]) -> Result<Vec<f64>, ServiceError> {
        let q = Tensor::new(1, rep.len(), rep.to_vec()).map_err(|e| ServiceError::Internal(e.to_string()))?;
        let s = self
            .params
            .score_representations(&q, &self.index.temporal)
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        Ok(s.into_data())
    }

    /// Top `k` videos by score; ties go to the smaller id.
    pub fn rank(&self, rep: &[f64], k: usize) -> Result<Vec<RankedVideo>, ServiceError> {
        let scores = self.scores(rep)?;
        Ok(rank_videos(&scores, &self.index.video_ids)
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (video_id, score))| RankedVideo {
                rank: i + 1,
                video_id,
                score,
            })
            .collect())
    }

    pub fn attention(&self, rep: &[f64], video_id: &str) -> Result<PooledScore, ServiceError> {
        let pos = self
            .index
            .position(video_id)
            .ok_or_else(|| ServiceError::NotFound(format!("video {video_id} is not in the index")))?;
        let q = Tensor::new(1, rep.len(), rep.to_vec()).map_err(|e| ServiceError::Internal(e.to_string()))?;
        self.params
            .pool_video(&q, &self.index.temporal[pos])
            .map_err(|e| ServiceError::Internal(e.to_string()))
    }
}
