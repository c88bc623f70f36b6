//! The model's forward pass expressed over a [`Graph`], shared by training
//! (trainable leaves) and inference (detached leaves).

use super::config::{Fusion, ModelConfig, Similarity};
use super::params::{AttentionLayer, QueryEncoder, Weights};
use super::ModelError;
use crate::autograd::{Graph, Var};

pub struct Forward<'a> {
    pub config: &'a ModelConfig,
    pub weights: &'a Weights<Var>,
}

/// Query-conditioned pooling of one video against a stack of queries.
pub struct PooledVars {
    /// `Q × n` softmax weights over frames.
    pub weights: Var,
    /// `Q × d` pooled video representations.
    pub video_reps: Var,
    /// `Q × 1` scores `dot(D^h, V^h)`.
    pub scores: Var,
}

impl Forward<'_> {
    fn check_dim(&self, g: &Graph, v: Var) -> Result<(), ModelError> {
        let got = g.shape(v)[1];
        if got != self.config.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.config.dim,
                got,
            });
        }
        Ok(())
    }

    /// `f_i^p = f_i^h + p_i` for each frame row.
    pub fn inject_positions(&self, g: &mut Graph, frames: Var) -> Result<Var, ModelError> {
        self.check_dim(g, frames)?;
        let n = g.shape(frames)[0];
        if n > self.config.max_frames {
            return Err(ModelError::TooManyFrames {
                frames: n,
                max: self.config.max_frames,
            });
        }
        let positions = g.slice_rows(self.weights.positional, 0, n)?;
        Ok(g.add(frames, positions)?)
    }

    /// Position injection followed by the stacked self-attention layers.
    pub fn encode_frames(&self, g: &mut Graph, frames: Var) -> Result<Var, ModelError> {
        let mut x = self.inject_positions(g, frames)?;
        for layer in &self.weights.layers {
            x = self.attention_block(g, layer, x)?;
        }
        Ok(x)
    }

    fn attention_block(&self, g: &mut Graph, layer: &AttentionLayer<Var>, x: Var) -> Result<Var, ModelError> {
        let heads = self.config.heads;
        let hd = self.config.head_dim();
        let scale = 1.0 / (hd as f64).sqrt();

        let q = g.matmul(x, layer.query)?;
        let k = g.matmul(x, layer.key)?;
        let v = g.matmul(x, layer.value)?;
        let mut head_outputs = Vec::with_capacity(heads);
        for h in 0..heads {
            let qh = g.slice_cols(q, h * hd, hd)?;
            let kh = g.slice_cols(k, h * hd, hd)?;
            let vh = g.slice_cols(v, h * hd, hd)?;
            let kt = g.transpose(kh)?;
            let logits = g.matmul(qh, kt)?;
            let logits = g.scale(logits, scale)?;
            let attn = g.softmax_rows(logits)?;
            head_outputs.push(g.matmul(attn, vh)?);
        }
        let heads_cat = if heads == 1 {
            head_outputs[0]
        } else {
            g.concat_cols(&head_outputs)?
        };
        let mixed = g.matmul(heads_cat, layer.output)?;
        let residual = g.add(x, mixed)?;
        let mut out = g.layer_norm(residual, layer.norm_gain, layer.norm_bias)?;

        if let Some(ffn) = &layer.ffn {
            let hidden = g.matmul(out, ffn.w_in)?;
            let hidden = g.add_row(hidden, ffn.b_in)?;
            let hidden = g.activate(hidden, self.config.activation)?;
            let proj = g.matmul(hidden, ffn.w_out)?;
            let proj = g.add_row(proj, ffn.b_out)?;
            let residual = g.add(out, proj)?;
            out = g.layer_norm(residual, ffn.norm_gain, ffn.norm_bias)?;
        }
        Ok(out)
    }

    /// Per-turn dialogue states `d_1^h .. d_m^h` as an `m × d` matrix.
    pub fn encode_dialogue(&self, g: &mut Graph, turns: Var) -> Result<Var, ModelError> {
        self.check_dim(g, turns)?;
        match &self.weights.query_encoder {
            QueryEncoder::Recurrent(cell) => {
                let m = g.shape(turns)[0];
                let mut state = cell.initial_state;
                let mut states = Vec::with_capacity(m);
                for i in 0..m {
                    let turn = g.slice_rows(turns, i, 1)?;
                    let carried = g.matmul(state, cell.state_weight)?;
                    let fresh = g.matmul(turn, cell.input_weight)?;
                    let sum = g.add(carried, fresh)?;
                    state = g.add(sum, cell.bias)?;
                    states.push(state);
                }
                Ok(if m == 1 { states[0] } else { g.concat_rows(&states)? })
            }
            QueryEncoder::Projection { weight, bias } => {
                let projected = g.matmul(turns, *weight)?;
                Ok(g.add_row(projected, *bias)?)
            }
        }
    }

    /// Fuses dialogue states into the `1 × d` query representation `D^h`.
    pub fn fuse_dialogue(&self, g: &mut Graph, states: Var) -> Result<Var, ModelError> {
        let m = g.shape(states)[0];
        let fused = match self.config.fusion {
            Fusion::Mean => g.mean_rows(states)?,
            Fusion::Last => g.slice_rows(states, m - 1, 1)?,
        };
        Ok(match self.weights.fusion_projection {
            Some(p) => g.matmul(fused, p)?,
            None => fused,
        })
    }

    pub fn query_representation(&self, g: &mut Graph, turns: Var) -> Result<Var, ModelError> {
        let states = self.encode_dialogue(g, turns)?;
        self.fuse_dialogue(g, states)
    }

    /// Pools the `n × d` temporal frames of one video for every row of the
    /// `Q × d` query stack.
    pub fn pool(&self, g: &mut Graph, queries: Var, temporal: Var) -> Result<PooledVars, ModelError> {
        self.check_dim(g, queries)?;
        self.check_dim(g, temporal)?;
        let sims = match self.config.similarity {
            Similarity::Dot => {
                let t = g.transpose(temporal)?;
                g.matmul(queries, t)?
            }
            Similarity::Cosine => {
                let qn = g.normalize_rows(queries)?;
                let tn = g.normalize_rows(temporal)?;
                let tt = g.transpose(tn)?;
                let cos = g.matmul(qn, tt)?;
                let log_t = self
                    .weights
                    .log_temperature
                    .ok_or_else(|| ModelError::Config("cosine similarity needs a temperature".into()))?;
                let temp = g.exp(log_t)?;
                g.scale_by(cos, temp)?
            }
        };
        let weights = g.softmax_rows(sims)?;
        let video_reps = g.matmul(weights, temporal)?;
        let prod = g.mul(queries, video_reps)?;
        let scores = g.row_sums(prod)?;
        Ok(PooledVars {
            weights,
            video_reps,
            scores,
        })
    }

    /// `Q × V` score matrix; column `v` pools against `temporal[v]`.
    pub fn score_matrix(&self, g: &mut Graph, queries: Var, temporal: &[Var]) -> Result<Var, ModelError> {
        if temporal.is_empty() {
            return Err(ModelError::Empty("no videos to score"));
        }
        let mut columns = Vec::with_capacity(temporal.len());
        for &t in temporal {
            columns.push(self.pool(g, queries, t)?.scores);
        }
        Ok(if columns.len() == 1 {
            columns[0]
        } else {
            g.concat_cols(&columns)?
        })
    }
}
