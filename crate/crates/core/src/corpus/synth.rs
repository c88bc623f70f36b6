//! Planted-correspondence synthetic corpora.
//!
//! Each video owns a latent vector `z`. A shared random projection maps
//! latents into embedding space, so frames and dialogue turns live in one
//! aligned space the way a pretrained dual encoder's outputs do. Frames show
//! the whole latent plus noise; dialogue turn `i` reveals only its own
//! disjoint slice of `z`, so the information carried by a dialogue prefix
//! grows with every turn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::container::EmbeddingRecord;
use super::split::{split_corpus, Split, SplitAssignment, SplitSpec};
use super::CorpusError;
use crate::embedding::EmbeddingMatrix;
use crate::model::DialogueMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Videos per split: train, val, test.
    pub num_videos: [usize; 3],
    pub frames: usize,
    pub turns: usize,
    pub dim: usize,
    pub latent_dim: usize,
    /// Per-component Gaussian noise on frame rows. Turn rows get
    /// `noise_sigma * sqrt(fraction)` so a full dialogue carries the same
    /// total noise as one frame.
    pub noise_sigma: f64,
    /// Share of the latent revealed by each turn, in order.
    pub turn_fractions: Vec<f64>,
    pub mode: DialogueMode,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let turns = 10;
        Self {
            num_videos: [512, 128, 128],
            frames: 8,
            turns,
            dim: 32,
            latent_dim: 20,
            noise_sigma: 0.05,
            turn_fractions: vec![1.0 / turns as f64; turns],
            mode: DialogueMode::PerTurn,
        }
    }
}

impl SyntheticConfig {
    /// Noise level at which the expected noise norm of a frame row equals
    /// its expected signal norm (both 1 in expectation at `1/sqrt(d)`).
    pub fn retrievable_noise_threshold(&self) -> f64 {
        1.0 / (self.dim as f64).sqrt()
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::Invalid(msg));
        if self.dim == 0 || self.frames == 0 || self.turns == 0 {
            return bad("dim, frames and turns must be positive".into());
        }
        if self.latent_dim > self.dim {
            return bad(format!("latent_dim {} exceeds dim {}", self.latent_dim, self.dim));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        if self.turn_fractions.len() != self.turns {
            return bad(format!(
                "{} turn fractions for {} turns",
                self.turn_fractions.len(),
                self.turns
            ));
        }
        if self.turn_fractions.iter().any(|&f| !(0.0..=1.0).contains(&f))
            || self.turn_fractions.iter().sum::<f64>() > 1.0 + 1e-9
        {
            return bad(format!("turn fractions {:?} must be in [0,1] and sum to at most 1", self.turn_fractions));
        }
        Ok(())
    }

    /// Latent index ranges revealed by each turn; consecutive, disjoint.
    pub fn turn_slices(&self) -> Vec<std::ops::Range<usize>> {
        let mut slices = Vec::with_capacity(self.turns);
        let mut cumulative = 0.0;
        let mut start = 0;
        for &f in &self.turn_fractions {
            cumulative += f;
            let end = ((cumulative * self.latent_dim as f64).round() as usize).clamp(start, self.latent_dim);
            slices.push(start..end);
            start = end;
        }
        slices
    }

    fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let revealed: usize = self.turn_slices().iter().map(|s| s.len()).sum();
        if self.latent_dim == 0 || revealed == 0 {
            w.push("synthetic config plants no signal in the dialogues; retrieval will be at chance".to_string());
        }
        if self.noise_sigma > self.retrievable_noise_threshold() {
            w.push(format!(
                "noise_sigma {} exceeds the retrievable threshold {:.4}",
                self.noise_sigma,
                self.retrievable_noise_threshold()
            ));
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSplit {
    pub videos: Vec<EmbeddingRecord>,
    pub dialogues: Vec<EmbeddingRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub config: SyntheticConfig,
    pub seed: u64,
    pub assignment: SplitAssignment,
    pub splits: Vec<(Split, SyntheticSplit)>,
    /// Latent projection `P` (`dim × latent_dim`, row-major).
    pub projection: Vec<f64>,
    /// Latent of every video, keyed like the records.
    pub latents: Vec<(String, Vec<f64>)>,
    pub warnings: Vec<String>,
}

impl SyntheticCorpus {
    pub fn split(&self, split: Split) -> &SyntheticSplit {
        &self
            .splits
            .iter()
            .find(|(s, _)| *s == split)
            .expect("all splits generated")
            .1
    }

    /// `P z` for a given latent.
    pub fn project(&self, latent: &[f64]) -> Vec<f64> {
        project(&self.projection, self.config.dim, latent)
    }
}

fn project(p: &[f64], dim: usize, latent: &[f64]) -> Vec<f64> {
    let k = latent.len();
    (0..dim)
        .map(|r| (0..k).map(|c| p[r * k + c] * latent[c]).sum())
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<SyntheticCorpus, CorpusError> {
    config.validate()?;
    let warnings = config.warnings();
    for w in &warnings {
        log::warn!("{w}");
    }
    let (d, k) = (config.dim, config.latent_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Entries N(0, 1/d) keep E|P z|^2 = |z|^2.
    let proj_scale = 1.0 / (d as f64).sqrt();
    let projection: Vec<f64> = (0..d * k).map(|_| gaussian(&mut rng) * proj_scale).collect();

    let total: usize = config.num_videos.iter().sum();
    let ids: Vec<String> = (0..total).map(|i| format!("vid{i:05}")).collect();
    let assignment = split_corpus(&ids, &SplitSpec::Counts(config.num_videos), seed)?;

    let slices = config.turn_slices();
    let latent_scale = if k == 0 { 0.0 } else { 1.0 / (k as f64).sqrt() };
    let sigma = config.noise_sigma;

    let mut latents = Vec::with_capacity(total);
    let mut records: std::collections::BTreeMap<String, (EmbeddingRecord, EmbeddingRecord)> = Default::default();
    for id in &ids {
        let z: Vec<f64> = (0..k).map(|_| gaussian(&mut rng) * latent_scale).collect();
        let signal = project(&projection, d, &z);

        let mut frames = Vec::with_capacity(config.frames * d);
        for _ in 0..config.frames {
            frames.extend(signal.iter().map(|s| (s + sigma * gaussian(&mut rng)) as f32));
        }

        let mut turns = Vec::with_capacity(config.turns * d);
        let mut revealed = vec![0.0; k];
        let mut revealed_fraction = 0.0;
        for (slice, &fraction) in slices.iter().zip(&config.turn_fractions) {
            let (part, noise_share) = match config.mode {
                DialogueMode::PerTurn => {
                    let mut part = vec![0.0; k];
                    part[slice.clone()].copy_from_slice(&z[slice.clone()]);
                    (part, fraction)
                }
                DialogueMode::CumulativePrefix => {
                    revealed[slice.clone()].copy_from_slice(&z[slice.clone()]);
                    revealed_fraction += fraction;
                    (revealed.clone(), revealed_fraction)
                }
            };
            let turn_sigma = sigma * noise_share.sqrt();
            let row = project(&projection, d, &part);
            turns.extend(row.iter().map(|s| (s + turn_sigma * gaussian(&mut rng)) as f32));
        }

        let video = EmbeddingRecord {
            id: id.clone(),
            matrix: EmbeddingMatrix::new(config.frames, d, frames)?,
        };
        let dialogue = EmbeddingRecord {
            id: id.clone(),
            matrix: EmbeddingMatrix::new(config.turns, d, turns)?,
        };
        records.insert(id.clone(), (video, dialogue));
        latents.push((id.clone(), z));
    }

    let splits = Split::ALL
        .iter()
        .map(|&split| {
            let mut part = SyntheticSplit {
                videos: Vec::new(),
                dialogues: Vec::new(),
            };
            for id in assignment.get(split) {
                let (v, q) = &records[id];
                part.videos.push(v.clone());
                part.dialogues.push(q.clone());
            }
            (split, part)
        })
        .collect();

    Ok(SyntheticCorpus {
        config: config.clone(),
        seed,
        assignment,
        splits,
        projection,
        latents,
        warnings,
    })
}
