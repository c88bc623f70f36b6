//! Dialogue-to-video retrieval engine.
//!
//! Videos arrive as precomputed frame embeddings and dialogues as per-turn
//! (or cumulative-prefix) embeddings. The engine adds temporal positions to
//! frames and runs them through a self-attention stack, encodes the dialogue
//! turn by turn, pools frames with query-conditioned attention and scores
//! pairs by dot product. Training uses a symmetric in-batch contrastive loss.

pub mod autograd;
pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod model;
pub mod tensor;
pub mod train;

pub use autograd::{Activation, Graph, Var};
pub use embedding::EmbeddingMatrix;
pub use model::{DialogueMode, DialogueQuery, ModelConfig, ModelError, ModelParams, VideoRecord};
pub use tensor::{Tensor, TensorError};
