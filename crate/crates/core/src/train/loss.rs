//! Symmetric in-batch contrastive loss over an `N × N` score matrix whose
//! row `i` / column `i` is the matched (dialogue, video) pair.

use serde::{Deserialize, Serialize};

use crate::autograd::{Graph, Var};
use crate::tensor::{Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossForm {
    /// Negative mean log-softmax of the diagonal (InfoNCE).
    #[default]
    LogSoftmax,
    /// Negative mean softmax probability of the diagonal, without the log.
    NegProbability,
}

impl std::str::FromStr for LossForm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log_softmax" | "infonce" => Ok(Self::LogSoftmax),
            "neg_probability" => Ok(Self::NegProbability),
            other => Err(format!("unknown loss form {other:?} (expected log_softmax or neg_probability)")),
        }
    }
}

fn check_square(shape: [usize; 2]) -> Result<usize, TensorError> {
    if shape[0] != shape[1] || shape[0] == 0 {
        return Err(TensorError::ShapeMismatch {
            op: "contrastive_loss",
            left: shape,
            right: [shape[0], shape[0]],
        });
    }
    Ok(shape[0])
}

/// Row-direction term: dialogue `i` against every video in the batch.
fn directional(g: &mut Graph, s: Var, form: LossForm) -> Result<Var, TensorError> {
    let n = check_square(g.shape(s))?;
    let normalized = match form {
        LossForm::LogSoftmax => g.log_softmax_rows(s)?,
        LossForm::NegProbability => g.softmax_rows(s)?,
    };
    let eye = g.constant(Tensor::identity(n));
    let diag = g.mul(normalized, eye)?;
    let total = g.sum(diag)?;
    g.scale(total, -1.0 / n as f64)
}

/// `(L_d2v + L_v2d) / 2` as a graph node.
pub fn contrastive_loss(g: &mut Graph, s: Var, form: LossForm) -> Result<Var, TensorError> {
    let d2v = directional(g, s, form)?;
    let st = g.transpose(s)?;
    let v2d = directional(g, st, form)?;
    let both = g.add(d2v, v2d)?;
    g.scale(both, 0.5)
}

/// Dialogue-to-video term alone (softmax over each row).
pub fn loss_d2v(s: &Tensor, form: LossForm) -> Result<f64, TensorError> {
    let mut g = Graph::new();
    let v = g.constant(s.clone());
    let l = directional(&mut g, v, form)?;
    Ok(g.value(l).item())
}

/// Video-to-dialogue term alone (softmax over each column).
pub fn loss_v2d(s: &Tensor, form: LossForm) -> Result<f64, TensorError> {
    loss_d2v(&s.transpose(), form)
}

pub fn contrastive_loss_value(s: &Tensor, form: LossForm) -> Result<f64, TensorError> {
    let mut g = Graph::new();
    let v = g.constant(s.clone());
    let l = contrastive_loss(&mut g, v, form)?;
    Ok(g.value(l).item())
}
