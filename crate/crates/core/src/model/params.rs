use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::config::{DialogueMode, InitScheme, ModelConfig, Similarity};
use super::ModelError;
use crate::autograd::{Graph, Var};
use crate::tensor::Tensor;

/// One self-attention block: multi-head attention, residual, layer norm,
/// then an optional residual feed-forward sublayer.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLayer<T> {
    pub query: T,
    pub key: T,
    pub value: T,
    pub output: T,
    pub norm_gain: T,
    pub norm_bias: T,
    pub ffn: Option<FeedForward<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward<T> {
    pub w_in: T,
    pub b_in: T,
    pub w_out: T,
    pub b_out: T,
    pub norm_gain: T,
    pub norm_bias: T,
}

/// `state_i = state_{i-1} · state_weight + turn_i · input_weight + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceCell<T> {
    pub state_weight: T,
    pub input_weight: T,
    pub bias: T,
    pub initial_state: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryEncoder<T> {
    Recurrent(RecurrenceCell<T>),
    /// Affine map applied to each cumulative-prefix row.
    Projection { weight: T, bias: T },
}

/// Every trainable tensor of the model. `T` is [`Tensor`] for stored
/// parameters and [`Var`] once they are bound into a [`Graph`].
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<T> {
    pub positional: T,
    pub layers: Vec<AttentionLayer<T>>,
    pub query_encoder: QueryEncoder<T>,
    pub fusion_projection: Option<T>,
    pub log_temperature: Option<T>,
}

impl<T> Weights<T> {
    /// Visits every tensor with a stable dotted name, in checkpoint order.
    pub fn for_each(&self, mut f: impl FnMut(&str, &T)) {
        self.walk(&mut |name, t| f(name, t));
    }

    fn walk<'a>(&'a self, f: &mut dyn FnMut(&str, &'a T)) {
        f("positional", &self.positional);
        for (i, layer) in self.layers.iter().enumerate() {
            f(&format!("layers.{i}.query"), &layer.query);
            f(&format!("layers.{i}.key"), &layer.key);
            f(&format!("layers.{i}.value"), &layer.value);
            f(&format!("layers.{i}.output"), &layer.output);
            f(&format!("layers.{i}.norm_gain"), &layer.norm_gain);
            f(&format!("layers.{i}.norm_bias"), &layer.norm_bias);
            if let Some(ffn) = &layer.ffn {
                f(&format!("layers.{i}.ffn.w_in"), &ffn.w_in);
                f(&format!("layers.{i}.ffn.b_in"), &ffn.b_in);
                f(&format!("layers.{i}.ffn.w_out"), &ffn.w_out);
                f(&format!("layers.{i}.ffn.b_out"), &ffn.b_out);
                f(&format!("layers.{i}.ffn.norm_gain"), &ffn.norm_gain);
                f(&format!("layers.{i}.ffn.norm_bias"), &ffn.norm_bias);
            }
        }
        match &self.query_encoder {
            QueryEncoder::Recurrent(cell) => {
                f("recurrence.state_weight", &cell.state_weight);
                f("recurrence.input_weight", &cell.input_weight);
                f("recurrence.bias", &cell.bias);
                f("recurrence.initial_state", &cell.initial_state);
            }
            QueryEncoder::Projection { weight, bias } => {
                f("prefix_projection.weight", weight);
                f("prefix_projection.bias", bias);
            }
        }
        if let Some(p) = &self.fusion_projection {
            f("fusion_projection", p);
        }
        if let Some(t) = &self.log_temperature {
            f("log_temperature", t);
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.for_each(|name, _| out.push(name.to_string()));
        out
    }

    pub fn values(&self) -> Vec<&T> {
        let mut out = Vec::new();
        self.walk(&mut |_, t| out.push(t));
        out
    }

    /// Structure-preserving map, applied in checkpoint order.
    pub fn map<U>(&self, f: &mut impl FnMut(&T) -> U) -> Weights<U> {
        Weights {
            positional: f(&self.positional),
            layers: self
                .layers
                .iter()
                .map(|l| AttentionLayer {
                    query: f(&l.query),
                    key: f(&l.key),
                    value: f(&l.value),
                    output: f(&l.output),
                    norm_gain: f(&l.norm_gain),
                    norm_bias: f(&l.norm_bias),
                    ffn: l.ffn.as_ref().map(|ffn| FeedForward {
                        w_in: f(&ffn.w_in),
                        b_in: f(&ffn.b_in),
                        w_out: f(&ffn.w_out),
                        b_out: f(&ffn.b_out),
                        norm_gain: f(&ffn.norm_gain),
                        norm_bias: f(&ffn.norm_bias),
                    }),
                })
                .collect(),
            query_encoder: match &self.query_encoder {
                QueryEncoder::Recurrent(c) => QueryEncoder::Recurrent(RecurrenceCell {
                    state_weight: f(&c.state_weight),
                    input_weight: f(&c.input_weight),
                    bias: f(&c.bias),
                    initial_state: f(&c.initial_state),
                }),
                QueryEncoder::Projection { weight, bias } => QueryEncoder::Projection {
                    weight: f(weight),
                    bias: f(bias),
                },
            },
            fusion_projection: self.fusion_projection.as_ref().map(&mut *f),
            log_temperature: self.log_temperature.as_ref().map(f),
        }
    }
}

impl Weights<Tensor> {
    pub fn values_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = vec![&mut self.positional];
        for layer in &mut self.layers {
            out.extend([
                &mut layer.query,
                &mut layer.key,
                &mut layer.value,
                &mut layer.output,
                &mut layer.norm_gain,
                &mut layer.norm_bias,
            ]);
            if let Some(ffn) = &mut layer.ffn {
                out.extend([
                    &mut ffn.w_in,
                    &mut ffn.b_in,
                    &mut ffn.w_out,
                    &mut ffn.b_out,
                    &mut ffn.norm_gain,
                    &mut ffn.norm_bias,
                ]);
            }
        }
        match &mut self.query_encoder {
            QueryEncoder::Recurrent(c) => out.extend([
                &mut c.state_weight,
                &mut c.input_weight,
                &mut c.bias,
                &mut c.initial_state,
            ]),
            QueryEncoder::Projection { weight, bias } => out.extend([weight, bias]),
        }
        if let Some(p) = &mut self.fusion_projection {
            out.push(p);
        }
        if let Some(t) = &mut self.log_temperature {
            out.push(t);
        }
        out
    }
}

/// Trainable state of the retrieval model together with its architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub weights: Weights<Tensor>,
}

/// CLIP's initial logit scale, `ln(1 / 0.07)`.
const INITIAL_LOG_TEMPERATURE: f64 = 2.659_260_036_932_778;

impl ModelParams {
    /// Fresh parameters. The positional table starts at zero; attention
    /// projections are uniform in `±1/sqrt(d)`.
    pub fn init(config: ModelConfig, scheme: InitScheme, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let d = config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (d as f64).sqrt();
        let mut uniform = |rows, cols, bound| Tensor::uniform(rows, cols, bound, &mut rng);

        let layers = (0..config.layers)
            .map(|_| AttentionLayer {
                query: uniform(d, d, bound),
                key: uniform(d, d, bound),
                value: uniform(d, d, bound),
                output: uniform(d, d, bound),
                norm_gain: Tensor::ones(1, d),
                norm_bias: Tensor::zeros(1, d),
                ffn: config.ffn_hidden.map(|h| FeedForward {
                    w_in: uniform(d, h, bound),
                    b_in: Tensor::zeros(1, h),
                    w_out: uniform(h, d, 1.0 / (h as f64).sqrt()),
                    b_out: Tensor::zeros(1, d),
                    norm_gain: Tensor::ones(1, d),
                    norm_bias: Tensor::zeros(1, d),
                }),
            })
            .collect();

        let mut square = |rng_bound: f64| match scheme {
            InitScheme::Aligned => Tensor::identity(d),
            InitScheme::Random => uniform(d, d, rng_bound),
        };
        let query_encoder = match config.dialogue_mode {
            DialogueMode::PerTurn => QueryEncoder::Recurrent(RecurrenceCell {
                state_weight: square(bound),
                input_weight: square(bound),
                bias: Tensor::zeros(1, d),
                initial_state: Tensor::zeros(1, d),
            }),
            DialogueMode::CumulativePrefix => QueryEncoder::Projection {
                weight: square(bound),
                bias: Tensor::zeros(1, d),
            },
        };
        let fusion_projection = config.fusion_projection.then(|| square(bound));
        let log_temperature = (config.similarity == Similarity::Cosine)
            .then(|| Tensor::scalar(INITIAL_LOG_TEMPERATURE));

        Ok(Self {
            weights: Weights {
                positional: Tensor::zeros(config.max_frames, d),
                layers,
                query_encoder,
                fusion_projection,
                log_temperature,
            },
            config,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.values().iter().map(|t| t.len()).sum()
    }

    /// Registers every tensor in `graph`, trainable or detached.
    pub fn bind(&self, graph: &mut Graph, trainable: bool) -> Weights<Var> {
        self.weights.map(&mut |t: &Tensor| {
            if trainable {
                graph.param(t.clone())
            } else {
                graph.constant(t.clone())
            }
        })
    }

    /// Gradients of bound parameters, in checkpoint order.
    pub fn gradients(graph: &Graph, bound: &Weights<Var>) -> Vec<Tensor> {
        bound.values().into_iter().map(|&v| graph.grad(v)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.values().iter().all(|t| t.is_finite())
    }

    /// SHA-256 over the architecture and the `f32` parameter bytes; two
    /// parameter sets that serialize identically share a fingerprint.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&self.config).expect("config serializes"));
        self.weights.for_each(|name, t| {
            hasher.update(name.as_bytes());
            hasher.update((t.rows() as u32).to_le_bytes());
            hasher.update((t.cols() as u32).to_le_bytes());
            for v in t.data() {
                hasher.update((*v as f32).to_le_bytes());
            }
        });
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
