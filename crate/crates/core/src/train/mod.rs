//! Contrastive training loop: seeded shuffling, in-batch score matrices,
//! symmetric loss, global-norm clipping, AdamW and early stopping on a
//! validation metric.

pub mod loss;
pub mod optim;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use loss::{contrastive_loss, contrastive_loss_value, loss_d2v, loss_v2d, LossForm};
pub use optim::{adamw_step, clip_grad_norm, AdamW, OptimizerState};

use crate::autograd::{Graph, Var};
use crate::corpus::SplitData;
use crate::eval::{evaluate, EvalError, EvalReport};
use crate::model::{DialogueQuery, Forward, ModelError, ModelParams, VideoRecord};
use crate::tensor::{Tensor, TensorError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("non-finite gradient in parameter tensor {tensor}; step aborted")]
    NonFiniteGradient { tensor: usize },
    #[error("training diverged at epoch {epoch}, step {step} (loss {loss}); last good parameters retained")]
    Diverged {
        epoch: usize,
        step: usize,
        loss: f64,
        last_good: Box<ModelParams>,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("epoch log: {0}")]
    Log(String),
}

impl TrainError {
    /// NaN/inf anywhere in the step, including the debug-build checks
    /// inside the autograd tape.
    pub fn is_non_finite(&self) -> bool {
        matches!(
            self,
            Self::NonFiniteGradient { .. }
                | Self::Tensor(TensorError::NonFinite { .. })
                | Self::Model(ModelError::Tensor(TensorError::NonFinite { .. }))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopMetric {
    #[default]
    R1,
    R5,
    R10,
    MedRank,
    MeanRank,
}

impl StopMetric {
    /// Metric value oriented so that larger is better.
    pub fn score(self, r: &EvalReport) -> f64 {
        match self {
            Self::R1 => r.r1,
            Self::R5 => r.r5,
            Self::R10 => r.r10,
            Self::MedRank => -r.med_rank,
            Self::MeanRank => -r.mean_rank,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub max_grad_norm: f64,
    pub adamw_epsilon: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub early_stopping_metric: StopMetric,
    pub patience: usize,
    pub loss_form: LossForm,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            epochs: 10,
            batch_size: 16,
            max_grad_norm: 1.0,
            adamw_epsilon: 1e-8,
            weight_decay: 0.01,
            seed: 0,
            early_stopping_metric: StopMetric::R1,
            patience: 1,
            loss_form: LossForm::LogSoftmax,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("max_grad_norm", self.max_grad_norm),
            ("adamw_epsilon", self.adamw_epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TrainError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(TrainError::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.epochs == 0 || self.patience == 0 {
            return Err(TrainError::Config("epochs and patience must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(TrainError::Config(format!(
                "batch_size must be at least 2 for an in-batch contrastive loss, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> AdamW {
        AdamW::new(self.learning_rate, self.adamw_epsilon, self.weight_decay)
    }
}

/// One line of the JSON-lines epoch log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_r1: f64,
    pub val_r5: f64,
    pub val_r10: f64,
    pub val_med: f64,
    pub val_mean: f64,
    pub grad_norm_mean: f64,
}

/// Loss and per-tensor gradients (checkpoint order) of one batch.
#[derive(Debug, Clone)]
pub struct BatchGradients {
    pub loss: f64,
    pub grads: Vec<Tensor>,
}

/// Builds the batch `N × N` score matrix on `g` with bound weights.
fn batch_scores(
    params: &ModelParams,
    g: &mut Graph,
    fwd: &Forward<'_>,
    queries: &[&DialogueQuery],
    videos: &[&VideoRecord],
) -> Result<Var, TrainError> {
    let mut reps = Vec::with_capacity(queries.len());
    for q in queries {
        params.check_mode(q)?;
        let turns = g.constant(q.turns.to_tensor()?);
        reps.push(fwd.query_representation(g, turns)?);
    }
    let q = g.concat_rows(&reps)?;
    let mut temporal = Vec::with_capacity(videos.len());
    for v in videos {
        let frames = g.constant(v.frames.to_tensor()?);
        temporal.push(fwd.encode_frames(g, frames)?);
    }
    Ok(fwd.score_matrix(g, q, &temporal)?)
}

/// Contrastive loss of a batch of matched pairs, without gradients.
pub fn batch_loss(
    params: &ModelParams,
    queries: &[&DialogueQuery],
    videos: &[&VideoRecord],
    form: LossForm,
) -> Result<f64, TrainError> {
    let mut g = Graph::new();
    let bound = params.bind(&mut g, false);
    let fwd = Forward {
        config: &params.config,
        weights: &bound,
    };
    let s = batch_scores(params, &mut g, &fwd, queries, videos)?;
    let l = contrastive_loss(&mut g, s, form)?;
    Ok(g.value(l).item())
}

/// Contrastive loss of a batch and its gradient for every parameter.
pub fn batch_gradients(
    params: &ModelParams,
    queries: &[&DialogueQuery],
    videos: &[&VideoRecord],
    form: LossForm,
) -> Result<BatchGradients, TrainError> {
    if queries.len() != videos.len() || queries.is_empty() {
        return Err(TrainError::Config(format!(
            "batch needs matched pairs, got {} queries and {} videos",
            queries.len(),
            videos.len()
        )));
    }
    let mut g = Graph::new();
    let bound = params.bind(&mut g, true);
    let fwd = Forward {
        config: &params.config,
        weights: &bound,
    };
    let s = batch_scores(params, &mut g, &fwd, queries, videos)?;
    let l = contrastive_loss(&mut g, s, form)?;
    g.backward(l)?;
    Ok(BatchGradients {
        loss: g.value(l).item(),
        grads: ModelParams::gradients(&g, &bound),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub grad_norm: f64,
}

/// Gradient, clip and AdamW update on one batch. Parameters are left
/// untouched when the loss is non-finite.
pub fn train_step(
    params: &mut ModelParams,
    state: &mut OptimizerState,
    config: &TrainConfig,
    queries: &[&DialogueQuery],
    videos: &[&VideoRecord],
) -> Result<StepStats, TrainError> {
    let BatchGradients { loss, mut grads } = batch_gradients(params, queries, videos, config.loss_form)?;
    if !loss.is_finite() {
        return Ok(StepStats {
            loss,
            grad_norm: f64::NAN,
        });
    }
    let grad_norm = clip_grad_norm(&mut grads, config.max_grad_norm)?;
    let mut slots = params.weights.values_mut();
    adamw_step(&mut slots, &grads, state, &config.optimizer())?;
    Ok(StepStats { loss, grad_norm })
}

/// Produces the per-epoch validation report that drives early stopping.
pub trait Validator {
    fn validate(&mut self, params: &ModelParams, epoch: usize) -> Result<EvalReport, TrainError>;
}

/// Full evaluation on a held-out split.
pub struct SplitValidator<'a>(pub &'a SplitData);

impl Validator for SplitValidator<'_> {
    fn validate(&mut self, params: &ModelParams, _epoch: usize) -> Result<EvalReport, TrainError> {
        Ok(evaluate(params, self.0)?)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation metric.
    pub best: ModelParams,
    pub best_epoch: usize,
    pub best_report: EvalReport,
    pub log: Vec<EpochLog>,
    pub stopped_early: bool,
}

/// Batches of indices into the training split for one epoch; a final
/// remainder smaller than 2 is dropped.
pub fn epoch_batches(n: usize, batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
        .chunks(batch_size)
        .filter(|c| c.len() >= 2)
        .map(|c| c.to_vec())
        .collect()
}

/// Trains `params` on `train`, calling `on_epoch` after each epoch's
/// validation. Stops once the metric has failed to beat the best epoch
/// `patience` times in a row.
pub fn train(
    config: &TrainConfig,
    train: &SplitData,
    mut params: ModelParams,
    validator: &mut dyn Validator,
    on_epoch: &mut dyn FnMut(&EpochLog) -> Result<(), TrainError>,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    if train.len() < 2 {
        return Err(TrainError::Config("training split needs at least 2 pairs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = OptimizerState::new(params.weights.values());
    let mut log = Vec::new();
    let mut best: Option<(ModelParams, usize, EvalReport)> = None;
    let mut misses = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        let batches = epoch_batches(train.len(), config.batch_size, &mut rng);
        let mut loss_sum = 0.0;
        let mut norm_sum = 0.0;
        for (step, batch) in batches.iter().enumerate() {
            let queries: Vec<&DialogueQuery> = batch.iter().map(|&i| &train.queries[i]).collect();
            let videos: Vec<&VideoRecord> = batch.iter().map(|&i| &train.videos[train.gold[i]]).collect();
            let last_good = params.clone();
            let stats = match train_step(&mut params, &mut state, config, &queries, &videos) {
                Ok(s) => s,
                Err(e) if e.is_non_finite() => StepStats {
                    loss: f64::NAN,
                    grad_norm: f64::NAN,
                },
                Err(e) => return Err(e),
            };
            if !stats.loss.is_finite() || !stats.grad_norm.is_finite() || !params.is_finite() {
                warn!("divergence at epoch {epoch} step {step}: loss {}", stats.loss);
                return Err(TrainError::Diverged {
                    epoch,
                    step,
                    loss: stats.loss,
                    last_good: Box::new(last_good),
                });
            }
            loss_sum += stats.loss;
            norm_sum += stats.grad_norm;
        }
        let steps = batches.len().max(1) as f64;
        let report = validator.validate(&params, epoch)?;
        let entry = EpochLog {
            epoch,
            train_loss: loss_sum / steps,
            val_r1: report.r1,
            val_r5: report.r5,
            val_r10: report.r10,
            val_med: report.med_rank,
            val_mean: report.mean_rank,
            grad_norm_mean: norm_sum / steps,
        };
        info!(
            "epoch {epoch}: loss {:.5} val R@1 {:.4} R@5 {:.4} MedR {}",
            entry.train_loss, entry.val_r1, entry.val_r5, entry.val_med
        );
        on_epoch(&entry)?;
        log.push(entry);

        let score = config.early_stopping_metric.score(&report);
        let improved = match &best {
            None => true,
            Some((_, _, b)) => score > config.early_stopping_metric.score(b),
        };
        if improved {
            best = Some((params.clone(), epoch, report));
            misses = 0;
        } else {
            misses += 1;
            if misses >= config.patience {
                info!("early stop after epoch {epoch}");
                stopped_early = epoch < config.epochs;
                break;
            }
        }
    }

    let (best, best_epoch, best_report) = best.expect("at least one epoch runs");
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_report,
        log,
        stopped_early,
    })
}
