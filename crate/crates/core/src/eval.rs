//! Ranking metrics (R@K, median rank, mean rank) and the dialogue-rounds
//! ablation.
//!
//! Ties are broken by candidate order: a candidate that scores exactly the
//! gold score outranks it only if it comes earlier. Corpora keep their
//! videos sorted by id, so this is the video-id tie rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SplitData;
use crate::model::{ModelError, ModelParams};
use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no ranks to summarize")]
    Empty,
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("query {query} has gold index {gold} outside {candidates} candidates")]
    MissingGold {
        query: usize,
        gold: usize,
        candidates: usize,
    },
    #[error("score matrix has {rows} rows but {gold} gold entries")]
    GoldCount { rows: usize, gold: usize },
    #[error("non-finite score for query {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Ranked candidates for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub query_id: String,
    /// `(video_id, score)`, best first.
    pub ranking: Vec<(String, f64)>,
    pub gold_video_id: String,
    pub gold_rank: usize,
}

/// Orders candidates by score (descending), ties by video id (ascending).
pub fn rank_videos(scores: &[f64], video_ids: &[String]) -> Vec<(String, f64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| video_ids[a].cmp(&video_ids[b]))
    });
    order
        .into_iter()
        .map(|i| (video_ids[i].clone(), scores[i]))
        .collect()
}

impl RankingResult {
    pub fn new(query_id: &str, scores: &[f64], video_ids: &[String], gold: usize) -> Self {
        let ranking = rank_videos(scores, video_ids);
        let gold_video_id = video_ids[gold].clone();
        let gold_rank = ranking
            .iter()
            .position(|(id, _)| *id == gold_video_id)
            .map(|p| p + 1)
            .unwrap_or(ranking.len());
        Self {
            query_id: query_id.to_string(),
            ranking,
            gold_video_id,
            gold_rank,
        }
    }
}

/// 1-based rank of each query's gold candidate in a `Q × V` score matrix.
pub fn compute_ranks(scores: &Tensor, gold: &[usize]) -> Result<Vec<usize>, EvalError> {
    if gold.len() != scores.rows() {
        return Err(EvalError::GoldCount {
            rows: scores.rows(),
            gold: gold.len(),
        });
    }
    gold.iter()
        .enumerate()
        .map(|(q, &g)| {
            let row = scores.row(q);
            if g >= row.len() {
                return Err(EvalError::MissingGold {
                    query: q,
                    gold: g,
                    candidates: row.len(),
                });
            }
            if row.iter().any(|s| !s.is_finite()) {
                return Err(EvalError::NonFinite(q));
            }
            let target = row[g];
            let better = row
                .iter()
                .enumerate()
                .filter(|&(j, &s)| s > target || (s == target && j < g))
                .count();
            Ok(better + 1)
        })
        .collect()
}

pub fn recall_at_k(ranks: &[usize], k: usize) -> Result<f64, EvalError> {
    if k < 1 {
        return Err(EvalError::InvalidK(k));
    }
    if ranks.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = ranks.iter().filter(|&&r| r <= k).count();
    Ok(hits as f64 / ranks.len() as f64)
}

/// Median rank; for an even count, the mean of the two central ranks.
pub fn median_rank(ranks: &[usize]) -> Result<f64, EvalError> {
    if ranks.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    })
}

pub fn mean_rank(ranks: &[usize]) -> Result<f64, EvalError> {
    if ranks.is_empty() {
        return Err(EvalError::Empty);
    }
    let total: usize = ranks.iter().sum();
    Ok(total as f64 / ranks.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundPoint {
    pub rounds: usize,
    pub r1: f64,
    pub r5: f64,
    pub r10: f64,
    pub med_rank: f64,
    pub mean_rank: f64,
}

/// Evaluation report; serialized as the JSON report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub r1: f64,
    pub r5: f64,
    pub r10: f64,
    pub med_rank: f64,
    pub mean_rank: f64,
    pub num_queries: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds_curve: Option<Vec<RoundPoint>>,
}

impl EvalReport {
    pub fn from_ranks(ranks: &[usize]) -> Result<Self, EvalError> {
        Ok(Self {
            r1: recall_at_k(ranks, 1)?,
            r5: recall_at_k(ranks, 5)?,
            r10: recall_at_k(ranks, 10)?,
            med_rank: median_rank(ranks)?,
            mean_rank: mean_rank(ranks)?,
            num_queries: ranks.len(),
            rounds_curve: None,
        })
    }

    fn point(&self, rounds: usize) -> RoundPoint {
        RoundPoint {
            rounds,
            r1: self.r1,
            r5: self.r5,
            r10: self.r10,
            med_rank: self.med_rank,
            mean_rank: self.mean_rank,
        }
    }
}

/// Scores every query of a split against every video of that split.
pub fn score_split(params: &ModelParams, split: &SplitData) -> Result<Tensor, EvalError> {
    Ok(params.score_matrix(&split.queries, &split.videos)?)
}

/// Full metric suite for one split.
pub fn evaluate(params: &ModelParams, split: &SplitData) -> Result<EvalReport, EvalError> {
    let scores = score_split(params, split)?;
    EvalReport::from_ranks(&compute_ranks(&scores, &split.gold)?)
}

/// Re-evaluates with every query cut to its first `r` turns, for each `r`.
pub fn rounds_ablation(
    params: &ModelParams,
    split: &SplitData,
    rounds_list: &[usize],
) -> Result<Vec<RoundPoint>, EvalError> {
    let temporal = split
        .videos
        .iter()
        .map(|v| params.encode_frames(v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut curve = Vec::with_capacity(rounds_list.len());
    for &r in rounds_list {
        let truncated = split
            .queries
            .iter()
            .map(|q| q.truncated(r))
            .collect::<Result<Vec<_>, _>>()?;
        let reps = params.query_representations(&truncated)?;
        let scores = params.score_representations(&reps, &temporal)?;
        let report = EvalReport::from_ranks(&compute_ranks(&scores, &split.gold)?)?;
        curve.push(report.point(r));
    }
    Ok(curve)
}
