//! Split, train and predict in one call.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{split_train_eval, Dataset, DatasetError};
use crate::predictor::{
    train, BucketConfig, DualHeadModel, FusionConfig, PredictionTable, Predictor, PredictorError,
    RetrievalStore, TrainConfig, TrainingLog,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub eval_fraction: f64,
    pub split_seed: u64,
    pub n_buckets: usize,
    /// Overrides `n_buckets` with fixed-width bins when set.
    #[serde(default)]
    pub bucket_size: Option<u32>,
    /// Standard deviation of the initial weights.
    pub init_scale: f64,
    pub init_seed: u64,
    pub train: TrainConfig,
    pub fusion: FusionConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            eval_fraction: 0.2,
            split_seed: 0,
            n_buckets: 10,
            bucket_size: None,
            init_scale: 0.01,
            init_seed: 0,
            train: TrainConfig::default(),
            fusion: FusionConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Same seed for split, initialization and batch order.
    pub fn seeded(seed: u64) -> Self {
        let base = PipelineConfig::default();
        PipelineConfig {
            split_seed: seed,
            init_seed: seed,
            train: TrainConfig { seed, ..base.train },
            ..base
        }
    }
}

/// A fitted predictor and the two halves it was fitted and scored on.
#[derive(Clone, Debug)]
pub struct Fitted {
    pub train_set: Dataset,
    pub eval_set: Dataset,
    pub predictor: Predictor,
    pub log: TrainingLog,
}

impl Fitted {
    pub fn eval_predictions(&self) -> Result<PredictionTable, PredictorError> {
        self.predictor.predict_dataset(&self.eval_set)
    }
}

/// Trains the heads and builds the retrieval store from the training half
/// only, so eval queries never retrieve themselves.
pub fn fit(dataset: &Dataset, config: &PipelineConfig) -> Result<Fitted, PipelineError> {
    let (train_set, eval_set) = split_train_eval(dataset, config.eval_fraction, config.split_seed)?;
    let buckets = match config.bucket_size {
        Some(size) => BucketConfig::with_bucket_size(dataset.l_max, size)?,
        None => BucketConfig::with_bucket_count(dataset.l_max, config.n_buckets)?,
    };
    let initial = DualHeadModel::random(
        dataset.embedding_dim,
        buckets,
        config.init_scale,
        config.init_seed,
    );
    let (head, log) = train(&initial, &train_set, &config.train)?;
    let store = RetrievalStore::from_dataset(&train_set)?;
    let predictor = Predictor::new(head, store, config.fusion)?;
    Ok(Fitted {
        train_set,
        eval_set,
        predictor,
        log,
    })
}
