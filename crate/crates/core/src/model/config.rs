use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::autograd::Activation;

/// How dialogue turns are embedded upstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DialogueMode {
    /// Row `i` embeds turn `i` alone; the engine runs a learned recurrence.
    #[default]
    PerTurn,
    /// Row `i` embeds the concatenated text of turns `1..=i`.
    CumulativePrefix,
}

impl std::fmt::Display for DialogueMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DialogueMode::PerTurn => "per_turn",
            DialogueMode::CumulativePrefix => "cumulative_prefix",
        })
    }
}

/// Reduction of per-turn dialogue states into one query vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    #[default]
    Mean,
    Last,
}

/// Query-to-frame similarity used for the pooling weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    #[default]
    Dot,
    /// Cosine similarity times a learned temperature `exp(t)`.
    Cosine,
}

/// Starting point for freshly created parameters.
///
/// `Aligned` starts every query-side map at the identity, so an untrained
/// model scores raw embeddings by (attention-mixed) dot product, the way a
/// pretrained dual encoder would before fine-tuning. `Random` draws those
/// maps from the same scaled uniform as the attention projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    #[default]
    Aligned,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    pub max_frames: usize,
    pub layers: usize,
    pub heads: usize,
    /// Hidden width of an optional feed-forward sublayer after attention.
    #[serde(default)]
    pub ffn_hidden: Option<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub dialogue_mode: DialogueMode,
    #[serde(default)]
    pub fusion: Fusion,
    #[serde(default)]
    pub fusion_projection: bool,
    #[serde(default)]
    pub similarity: Similarity,
}

impl ModelConfig {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            max_frames: 32,
            layers: 2,
            heads: 4,
            ffn_hidden: None,
            activation: Activation::Gelu,
            dialogue_mode: DialogueMode::PerTurn,
            fusion: Fusion::Mean,
            fusion_projection: false,
            similarity: Similarity::Dot,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dim == 0 || self.max_frames == 0 {
            return Err(ModelError::Config("dim and max_frames must be positive".into()));
        }
        if self.heads == 0 || !self.dim.is_multiple_of(self.heads) {
            return Err(ModelError::Config(format!(
                "head count {} must divide embedding dim {}",
                self.heads, self.dim
            )));
        }
        if self.ffn_hidden == Some(0) {
            return Err(ModelError::Config("ffn_hidden must be positive".into()));
        }
        Ok(())
    }
}
