//! Mini-batch gradient descent for both heads.
//!
//! Per pair the loss is `(a_pred - a_obs)^2 + CE(bucket distribution,
//! observed bucket)`, averaged over the batch.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;

use super::dual_head::{sigmoid, softmax, DualHeadModel};
use super::PredictorError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            learning_rate: 0.5,
            batch_size: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub capability: f64,
    pub length: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.capability + self.length
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Full-set loss before the first update.
    pub initial: LossBreakdown,
    /// Full-set loss after each epoch.
    pub epochs: Vec<LossBreakdown>,
}

/// One (query, model) training pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub query: usize,
    pub model: usize,
    pub capability: f64,
    pub bucket: usize,
}

/// Dense training data: embeddings once per query and per model, plus pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub query_embeddings: Vec<Vec<f64>>,
    pub model_embeddings: Vec<Vec<f64>>,
    pub samples: Vec<Sample>,
}

impl TrainingSet {
    pub fn from_dataset(dataset: &Dataset, model: &DualHeadModel) -> Self {
        let mut samples = Vec::with_capacity(dataset.n_queries() * dataset.n_models());
        for (qi, q) in dataset.queries.iter().enumerate() {
            for (mi, m) in dataset.models.iter().enumerate() {
                samples.push(Sample {
                    query: qi,
                    model: mi,
                    capability: if q.is_correct(&m.id) { 1.0 } else { 0.0 },
                    bucket: model.buckets.bucket_of(q.out_tokens_for(&m.id)),
                });
            }
        }
        TrainingSet {
            query_embeddings: dataset
                .queries
                .iter()
                .map(|q| q.embedding.clone())
                .collect(),
            model_embeddings: dataset.models.iter().map(|m| m.embedding.clone()).collect(),
            samples,
        }
    }
}

/// Gradient with the same layout as [`DualHeadModel`]'s parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub w1: Vec<f64>,
    pub b1: f64,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Mean loss and its gradient over `batch` (indices into `set.samples`).
pub fn loss_and_gradient(
    model: &DualHeadModel,
    set: &TrainingSet,
    batch: &[usize],
) -> (LossBreakdown, Gradient) {
    let dim = model.dim;
    let k = model.n_buckets();
    let mut grad = Gradient {
        w1: vec![0.0; dim],
        b1: 0.0,
        w2: vec![0.0; k * dim],
        b2: vec![0.0; k],
    };
    let mut loss = LossBreakdown::default();
    if batch.is_empty() {
        return (loss, grad);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut sum_x = vec![0.0; dim];
    for &s in batch {
        let sample = set.samples[s];
        let q = &set.query_embeddings[sample.query];
        let l = &set.model_embeddings[sample.model];

        let p = sigmoid(model.capability_logit_unchecked(q, l));
        let err = p - sample.capability;
        loss.capability += err * err * scale;
        let dz = 2.0 * err * p * (1.0 - p) * scale;
        for ((g, a), b) in grad.w1.iter_mut().zip(q).zip(l) {
            *g += dz * a * b;
        }
        grad.b1 += dz;

        for ((x, a), b) in sum_x.iter_mut().zip(q).zip(l) {
            *x = a + b;
        }
        let probs = softmax(&model.length_logits_unchecked(q, l));
        loss.length -= probs[sample.bucket].max(f64::MIN_POSITIVE).ln() * scale;
        for (kk, &pk) in probs.iter().enumerate() {
            let dk = (pk - if kk == sample.bucket { 1.0 } else { 0.0 }) * scale;
            grad.b2[kk] += dk;
            for (g, x) in grad.w2[kk * dim..(kk + 1) * dim].iter_mut().zip(&sum_x) {
                *g += dk * x;
            }
        }
    }
    (loss, grad)
}

pub fn evaluate_loss(model: &DualHeadModel, set: &TrainingSet) -> LossBreakdown {
    let all: Vec<usize> = (0..set.samples.len()).collect();
    loss_and_gradient(model, set, &all).0
}

fn apply(model: &mut DualHeadModel, grad: &Gradient, lr: f64) {
    for (w, g) in model.w1.iter_mut().zip(&grad.w1) {
        *w -= lr * g;
    }
    model.b1 -= lr * grad.b1;
    for (w, g) in model.w2.iter_mut().zip(&grad.w2) {
        *w -= lr * g;
    }
    for (w, g) in model.b2.iter_mut().zip(&grad.b2) {
        *w -= lr * g;
    }
}

/// Trains both heads on every (query, model) pair of `train_set`.
pub fn train(
    initial: &DualHeadModel,
    train_set: &Dataset,
    config: &TrainConfig,
) -> Result<(DualHeadModel, TrainingLog), PredictorError> {
    if train_set.n_queries() == 0 || train_set.n_models() == 0 {
        return Err(PredictorError::Argument("training set is empty".into()));
    }
    if train_set.embedding_dim != initial.dim {
        return Err(PredictorError::Dimension {
            expected: initial.dim,
            got: train_set.embedding_dim,
        });
    }
    if config.batch_size == 0 || !(config.learning_rate > 0.0) {
        return Err(PredictorError::Argument(
            "batch size and learning rate must be positive".into(),
        ));
    }
    let set = TrainingSet::from_dataset(train_set, initial);
    let mut model = initial.clone();
    let mut log = TrainingLog {
        initial: evaluate_loss(&model, &set),
        epochs: Vec::with_capacity(config.epochs),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..set.samples.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let (_, grad) = loss_and_gradient(&model, &set, batch);
            apply(&mut model, &grad, config.learning_rate);
        }
        let loss = evaluate_loss(&model, &set);
        if !loss.total().is_finite() || !model.is_finite() {
            return Err(PredictorError::Diverged { epoch });
        }
        log.epochs.push(loss);
    }
    Ok((model, log))
}
