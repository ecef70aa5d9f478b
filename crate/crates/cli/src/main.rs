use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod report;

/// Exit status 2: bad arguments or configuration. Exit status 1: the run failed.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

/// Turns any error into a configuration failure.
pub fn config<T, E: std::fmt::Display>(r: Result<T, E>) -> Outcome<T> {
    r.map_err(|e| Failure::Config(anyhow::anyhow!("{e}")))
}

/// Turns any error into a runtime failure.
pub fn runtime<T, E: std::fmt::Display>(r: Result<T, E>) -> Outcome<T> {
    r.map_err(|e| Failure::Runtime(anyhow::anyhow!("{e}")))
}

/// Budget- and quality-constrained routing of queries across language models.
///
/// Every option can also be set through an `LLM_ROUTER_<OPTION>` environment
/// variable, e.g. `LLM_ROUTER_ALPHA=0.8`.
#[derive(Parser, Debug)]
#[command(name = "llm-router", version, arg_required_else_help = true)]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0, env = "LLM_ROUTER_SEED")]
    pub seed: u64,
    /// Write the line-delimited report here instead of printing the summary.
    #[arg(long, global = true, env = "LLM_ROUTER_OUT")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load and validate a query file and model manifest.
    Ingest(IngestArgs),
    /// Fit the dual-head predictor on the training split.
    Train(TrainCmd),
    /// Score predictions on the held-out split.
    EvaluatePredictor(EvaluateArgs),
    /// Solve one routing batch.
    Route(RouteArgs),
    /// Run the serving simulation.
    Simulate(SimulateArgs),
    /// Run one simulation per parameter value.
    Sweep(SweepArgs),
    /// Compare the solver with exhaustive search on random small instances.
    OracleCompare(OracleArgs),
    /// Write a planted synthetic dataset.
    GenSynthetic(GenArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedder {
    Hashed,
    Precomputed,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DataArgs {
    /// Directory with `queries.jsonl` and `models.jsonl`.
    #[arg(long, env = "LLM_ROUTER_DATA", conflicts_with_all = ["queries", "models"])]
    pub data: Option<PathBuf>,
    /// Query records, one JSON object per line.
    #[arg(long, env = "LLM_ROUTER_QUERIES", requires = "models")]
    pub queries: Option<PathBuf>,
    /// Model manifest, one JSON object per line.
    #[arg(long, env = "LLM_ROUTER_MODELS", requires = "queries")]
    pub models: Option<PathBuf>,
    /// Extra embedding table keyed by query or model id.
    #[arg(long, env = "LLM_ROUTER_EMBEDDINGS")]
    pub embeddings: Option<PathBuf>,
    /// How to fill in missing embeddings.
    #[arg(
        long,
        value_enum,
        default_value = "hashed",
        env = "LLM_ROUTER_EMBEDDER"
    )]
    pub embedder: Embedder,
    /// Dimension of hashed embeddings.
    #[arg(long, default_value_t = llm_router::dataset::DEFAULT_EMBEDDING_DIM, env = "LLM_ROUTER_DIM")]
    pub dim: usize,
    /// Cap on output tokens per response.
    #[arg(long, default_value_t = 1024, env = "LLM_ROUTER_L_MAX")]
    pub l_max: u32,
    /// Size of the generated dataset used when no files are given.
    #[arg(long, default_value_t = 1000, env = "LLM_ROUTER_SYNTHETIC_QUERIES")]
    pub synthetic_queries: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 50, env = "LLM_ROUTER_EPOCHS")]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5, env = "LLM_ROUTER_LR")]
    pub lr: f64,
    #[arg(long, default_value_t = 64, env = "LLM_ROUTER_BATCH_SIZE")]
    pub batch_size: usize,
    /// Number of output-length buckets.
    #[arg(long, default_value_t = 10, env = "LLM_ROUTER_BUCKETS")]
    pub buckets: usize,
    /// Fixed bucket width in tokens; overrides `--buckets`.
    #[arg(long, env = "LLM_ROUTER_BUCKET_SIZE")]
    pub bucket_size: Option<u32>,
    /// Share of queries held out for evaluation and simulation.
    #[arg(long, default_value_t = 0.2, env = "LLM_ROUTER_EVAL_FRACTION")]
    pub eval_fraction: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FusionArgs {
    /// Neighbours used by retrieval.
    #[arg(long, default_value_t = 16, env = "LLM_ROUTER_K")]
    pub k: usize,
    /// Weight of the trained capability estimate.
    #[arg(long, default_value_t = 0.5, env = "LLM_ROUTER_GAMMA")]
    pub gamma: f64,
    /// Weight of the trained length estimate.
    #[arg(long, default_value_t = 0.5, env = "LLM_ROUTER_DELTA")]
    pub delta: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PredictorArgs {
    /// Head saved by `train --save`; a fresh one is trained when absent.
    #[arg(long, env = "LLM_ROUTER_PREDICTOR")]
    pub predictor: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub fusion: FusionArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Write the validated dataset, embeddings inline, to this directory.
    #[arg(long, env = "LLM_ROUTER_WRITE")]
    pub write: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Save the trained head here.
    #[arg(long, env = "LLM_ROUTER_SAVE")]
    pub save: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolverArgs {
    /// Minimum average predicted capability.
    #[arg(long, default_value_t = 0.75, env = "LLM_ROUTER_ALPHA")]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000, env = "LLM_ROUTER_MAX_ITERS")]
    pub max_iters: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RouteArgs {
    /// Instance in the text format; otherwise a batch is drawn from the data.
    #[arg(long, env = "LLM_ROUTER_INSTANCE")]
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Uniform concurrency limit per model.
    #[arg(long, default_value_t = 4, env = "LLM_ROUTER_CAPACITY")]
    pub capacity: u32,
    /// Held-out queries routed together.
    #[arg(long, default_value_t = 32, env = "LLM_ROUTER_BATCH")]
    pub batch: usize,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouterKind {
    Omni,
    GreedyCost,
    GreedyQuality,
    Random,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ServingArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Uniform concurrency limit; each model's own limit when absent.
    #[arg(long, env = "LLM_ROUTER_CAPACITY")]
    pub capacity: Option<u32>,
    /// Stop after this many simulated seconds.
    #[arg(long, env = "LLM_ROUTER_HORIZON")]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 100, env = "LLM_ROUTER_TICK_MS")]
    pub tick_ms: u64,
    #[arg(long, default_value_t = 1000, env = "LLM_ROUTER_INTERVAL_MS")]
    pub interval_ms: u64,
    /// Confidence needed by `greedy-cost` before it picks a cheap model.
    #[arg(long, default_value_t = llm_router::baselines::GreedyPolicy::DEFAULT_THRESHOLD, env = "LLM_ROUTER_THRESHOLD")]
    pub threshold: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "omni", env = "LLM_ROUTER_ROUTER")]
    pub router: RouterKind,
    #[command(flatten)]
    pub serving: ServingArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Alpha,
    Concurrency,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum, env = "LLM_ROUTER_PARAM")]
    pub param: Param,
    /// Ascending values, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        env = "LLM_ROUTER_VALUES"
    )]
    pub values: Vec<f64>,
    /// Routers to sweep; all four when absent.
    #[arg(
        long = "router",
        value_enum,
        value_delimiter = ',',
        env = "LLM_ROUTER_ROUTERS"
    )]
    pub routers: Vec<RouterKind>,
    /// Simulations run in parallel.
    #[arg(long, default_value_t = 1, env = "LLM_ROUTER_JOBS")]
    pub jobs: usize,
    #[command(flatten)]
    pub serving: ServingArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 200, env = "LLM_ROUTER_TRIALS")]
    pub trials: usize,
    #[arg(long, default_value_t = 8, env = "LLM_ROUTER_MAX_N")]
    pub max_n: usize,
    #[arg(long, default_value_t = 3, env = "LLM_ROUTER_MAX_M")]
    pub max_m: usize,
    #[arg(long, default_value_t = 1000, env = "LLM_ROUTER_MAX_ITERS")]
    pub max_iters: usize,
    /// Same as `--out`.
    #[arg(long, env = "LLM_ROUTER_REPORT")]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenArgs {
    /// Output directory for `queries.jsonl` and `models.jsonl`.
    #[arg(long, env = "LLM_ROUTER_DIR")]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 1000, env = "LLM_ROUTER_N_QUERIES")]
    pub n_queries: usize,
    #[arg(long, default_value_t = 10, env = "LLM_ROUTER_N_MODELS")]
    pub n_models: usize,
    /// Easy, medium and hard shares, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.784, 0.152, 0.064], env = "LLM_ROUTER_MIX")]
    pub mix: Vec<f64>,
    #[arg(long, default_value_t = 4, env = "LLM_ROUTER_CONCURRENCY")]
    pub concurrency: u32,
    #[arg(long, default_value_t = 1024, env = "LLM_ROUTER_L_MAX")]
    pub l_max: u32,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
