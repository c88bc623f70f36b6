//! `dtv`: synthesize corpora, train, evaluate, index and serve.

mod report;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dtv_core::corpus::{generate_synthetic, Corpus, Split, SplitData, SyntheticConfig};
use dtv_core::eval::{evaluate, rounds_ablation, EvalReport};
use dtv_core::model::{Fusion, InitScheme, ModelConfig, ModelParams, Similarity};
use dtv_core::train::{train, LossForm, SplitValidator, StopMetric, TrainConfig, TrainError};
use dtv_core::{Activation, DialogueMode};
use dtv_service::{Index, ServiceConfig};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "dtv", version, about = "Dialogue-to-video retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-correspondence synthetic corpus.
    Synth(SynthArgs),
    /// Train a model on a corpus and write the best checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint (or an untrained model) on a split.
    Eval(EvalArgs),
    /// Precompute temporal frame representations for serving.
    Index(IndexArgs),
    /// Run the HTTP retrieval service.
    Serve(ServeArgs),
    /// Render evaluation reports and epoch logs as Markdown.
    ExportReport(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    PerTurn,
    CumulativePrefix,
}

impl From<ModeArg> for DialogueMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PerTurn => DialogueMode::PerTurn,
            ModeArg::CumulativePrefix => DialogueMode::CumulativePrefix,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Aligned,
    Random,
}

impl From<InitArg> for InitScheme {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Aligned => InitScheme::Aligned,
            InitArg::Random => InitScheme::Random,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output corpus directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "synthetic")]
    name: String,
    /// Videos per split: train,val,test.
    #[arg(long, value_delimiter = ',', default_values_t = [512usize, 128, 128])]
    videos: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    frames: usize,
    #[arg(long, default_value_t = 10)]
    turns: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "per-turn")]
    mode: ModeArg,
}

#[derive(Args)]
struct ModelArgs {
    /// Initialization of the query-side maps.
    #[arg(long, value_enum, default_value = "aligned")]
    init: InitArg,
    #[arg(long, default_value_t = 0)]
    model_seed: u64,
    #[arg(long, default_value_t = 32)]
    max_frames: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 4)]
    heads: usize,
    /// Adds a feed-forward sublayer of this width to every attention layer.
    #[arg(long)]
    ffn_hidden: Option<usize>,
    #[arg(long, default_value = "gelu")]
    activation: String,
    #[arg(long, default_value = "mean")]
    fusion: String,
    #[arg(long)]
    fusion_projection: bool,
    #[arg(long, default_value = "dot")]
    similarity: String,
}

impl ModelArgs {
    fn config(&self, dim: usize, mode: DialogueMode) -> Result<ModelConfig> {
        let mut c = ModelConfig::new(dim);
        c.max_frames = self.max_frames;
        c.layers = self.layers;
        c.heads = self.heads;
        c.ffn_hidden = self.ffn_hidden;
        c.dialogue_mode = mode;
        c.fusion_projection = self.fusion_projection;
        c.activation = match self.activation.as_str() {
            "gelu" => Activation::Gelu,
            "relu" => Activation::Relu,
            other => return Err(format!("unknown activation {other:?} (gelu|relu)").into()),
        };
        c.fusion = match self.fusion.as_str() {
            "mean" => Fusion::Mean,
            "last" => Fusion::Last,
            other => return Err(format!("unknown fusion {other:?} (mean|last)").into()),
        };
        c.similarity = match self.similarity.as_str() {
            "dot" => Similarity::Dot,
            "cosine" => Similarity::Cosine,
            other => return Err(format!("unknown similarity {other:?} (dot|cosine)").into()),
        };
        Ok(c)
    }

    fn init(&self, dim: usize, mode: DialogueMode) -> Result<ModelParams> {
        Ok(ModelParams::init(self.config(dim, mode)?, self.init.into(), self.model_seed)?)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Checkpoint path for the best epoch.
    #[arg(long)]
    out: PathBuf,
    /// JSON-lines epoch log (default: the output path with extension .log.jsonl).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-5)]
    lr: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 1.0)]
    max_grad_norm: f64,
    #[arg(long, default_value_t = 1e-8)]
    adamw_eps: f64,
    #[arg(long, default_value_t = 0.01)]
    weight_decay: f64,
    #[arg(long, default_value_t = 1)]
    patience: usize,
    /// Shuffling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "log_softmax")]
    loss_form: LossForm,
    /// Truncate every dialogue to its first R rounds (R=1: single-turn).
    #[arg(long)]
    rounds: Option<usize>,
    /// Start from an existing checkpoint instead of a fresh init.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, required_unless_present = "untrained")]
    checkpoint: Option<PathBuf>,
    /// Evaluate freshly initialized parameters (see --init, default random).
    #[arg(long, conflicts_with = "checkpoint")]
    untrained: bool,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Truncate every dialogue to its first R rounds.
    #[arg(long)]
    rounds: Option<usize>,
    /// Add the 1..m rounds curve to the report.
    #[arg(long)]
    rounds_curve: bool,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "random")]
    init: InitArg,
    #[arg(long, default_value_t = 0)]
    model_seed: u64,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "DTV_CHECKPOINT")]
    checkpoint: PathBuf,
    #[arg(long, env = "DTV_INDEX")]
    index: PathBuf,
    #[arg(long, env = "DTV_EMBED_PROVIDER_URL")]
    embed_provider_url: Option<String>,
    #[arg(long, env = "DTV_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "DTV_MAX_TURNS", default_value_t = 10)]
    max_turns: usize,
    #[arg(long, env = "DTV_SESSION_SNAPSHOT")]
    session_snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Evaluation report(s) written by `eval --out`.
    #[arg(long = "eval", required = true)]
    evals: Vec<PathBuf>,
    /// Epoch log written by `train`.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Markdown output (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_split(corpus: &Corpus, split: Split, max_frames: usize, rounds: Option<usize>) -> Result<SplitData> {
    let data = corpus.load_split(split, max_frames)?;
    Ok(match rounds {
        Some(r) => data.with_rounds(r)?,
        None => data,
    })
}

fn synth(a: SynthArgs) -> Result<()> {
    let [train, val, test] = a.videos[..] else {
        return Err(format!("--videos needs three counts (train,val,test), got {}", a.videos.len()).into());
    };
    let defaults = SyntheticConfig::default();
    let config = SyntheticConfig {
        num_videos: [train, val, test],
        frames: a.frames,
        turns: a.turns,
        dim: a.dim,
        latent_dim: a.latent_dim.unwrap_or(defaults.latent_dim.min(a.dim)),
        noise_sigma: a.noise_sigma.unwrap_or(defaults.noise_sigma),
        turn_fractions: vec![1.0 / a.turns as f64; a.turns],
        mode: a.mode.into(),
    };
    let corpus = generate_synthetic(&config, a.seed)?;
    for w in &corpus.warnings {
        log::warn!("{w}");
    }
    let written = Corpus::write_synthetic(&a.out, &a.name, &corpus)?;
    println!("{}", serde_json::to_string_pretty(&written.manifest)?);
    Ok(())
}

fn run_train(a: TrainArgs) -> Result<()> {
    let corpus = Corpus::open(&a.corpus)?;
    let m = &corpus.manifest;
    let params = match &a.resume {
        Some(p) => ModelParams::load(p)?,
        None => a.model.init(m.embedding_dim, m.dialogue_mode)?,
    };
    let max_frames = params.config.max_frames;
    let train_data = load_split(&corpus, Split::Train, max_frames, a.rounds)?;
    let val = load_split(&corpus, Split::Val, max_frames, a.rounds)?;
    let config = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch,
        max_grad_norm: a.max_grad_norm,
        adamw_epsilon: a.adamw_eps,
        weight_decay: a.weight_decay,
        seed: a.seed,
        early_stopping_metric: StopMetric::R1,
        patience: a.patience,
        loss_form: a.loss_form,
    };
    let log_path = a.log.clone().unwrap_or_else(|| a.out.with_extension("log.jsonl"));
    let mut log = BufWriter::new(File::create(&log_path)?);
    let mut on_epoch = |e: &dtv_core::train::EpochLog| -> std::result::Result<(), TrainError> {
        let line = serde_json::to_string(e).map_err(|e| TrainError::Log(e.to_string()))?;
        writeln!(log, "{line}")
            .and_then(|_| log.flush())
            .map_err(|e| TrainError::Log(e.to_string()))?;
        eprintln!("{line}");
        Ok(())
    };
    let outcome = match train(&config, &train_data, params, &mut SplitValidator(&val), &mut on_epoch) {
        Ok(o) => o,
        Err(TrainError::Diverged {
            epoch,
            step,
            loss,
            last_good,
        }) => {
            let rescue = a.out.with_extension("diverged.dtvc");
            last_good.save(&rescue)?;
            return Err(format!(
                "training diverged at epoch {epoch} step {step} (loss {loss}); last good parameters saved to {}",
                rescue.display()
            )
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    outcome.best.save(&a.out)?;
    let summary = serde_json::json!({
        "checkpoint": a.out,
        "epoch_log": log_path,
        "best_epoch": outcome.best_epoch,
        "epochs_run": outcome.log.len(),
        "stopped_early": outcome.stopped_early,
        "best_val": outcome.best_report,
        "fingerprint": outcome.best.fingerprint(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run_eval(a: EvalArgs) -> Result<()> {
    let corpus = Corpus::open(&a.corpus)?;
    let m = &corpus.manifest;
    let params = match &a.checkpoint {
        Some(p) => ModelParams::load(p)?,
        None => {
            let config = ModelConfig {
                dialogue_mode: m.dialogue_mode,
                ..ModelConfig::new(m.embedding_dim)
            };
            ModelParams::init(config, a.init.into(), a.model_seed)?
        }
    };
    let data = load_split(&corpus, a.split.into(), params.config.max_frames, a.rounds)?;
    let mut report: EvalReport = evaluate(&params, &data)?;
    if a.rounds_curve {
        let max = data.queries.iter().map(|q| q.num_turns()).min().unwrap_or(0);
        report.rounds_curve = Some(rounds_ablation(&params, &data, &(1..=max).collect::<Vec<_>>())?);
    }
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &a.out {
        fs::write(out, format!("{json}\n"))?;
    }
    println!("{json}");
    Ok(())
}

fn run_index(a: IndexArgs) -> Result<()> {
    let corpus = Corpus::open(&a.corpus)?;
    let params = ModelParams::load(&a.checkpoint)?;
    let data = corpus.load_split(a.split.into(), params.config.max_frames)?;
    let index = Index::build(&params, &data.videos)?;
    index.save(&a.out)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "index": a.out,
            "videos": index.len(),
            "dim": index.dim,
            "checkpoint": index.fingerprint,
        }))?
    );
    Ok(())
}

fn run_serve(a: ServeArgs) -> Result<()> {
    let config = ServiceConfig {
        checkpoint: a.checkpoint,
        index: a.index,
        embed_provider_url: a.embed_provider_url.filter(|s| !s.is_empty()),
        port: a.port,
        max_turns: a.max_turns,
        session_snapshot: a.session_snapshot,
    };
    let state = config.load_state().map_err(|e| e.to_string())?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(dtv_service::config::serve(state, config.port))?;
    Ok(())
}

fn run_export(a: ExportArgs) -> Result<()> {
    let mut evals = Vec::new();
    for p in &a.evals {
        let report: EvalReport = serde_json::from_str(&fs::read_to_string(p)?)?;
        evals.push((label(p), report));
    }
    let epochs = match &a.log {
        Some(p) => report::read_epoch_log(p)?,
        None => Vec::new(),
    };
    let md = report::render(&evals, &epochs);
    match &a.out {
        Some(out) => fs::write(out, md)?,
        None => print!("{md}"),
    }
    Ok(())
}

fn label(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => run_train(a),
        Command::Eval(a) => run_eval(a),
        Command::Index(a) => run_index(a),
        Command::Serve(a) => run_serve(a),
        Command::ExportReport(a) => run_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
