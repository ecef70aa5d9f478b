//! Per query-model estimates of capability and cost: a trained dual-head
//! scorer blended with similarity-weighted averages over historical queries.

mod dual_head;
mod evaluate;
mod fusion;
mod retrieval;
mod train;

use thiserror::Error;

use crate::dataset::{Dataset, ModelSpec, QueryRecord};

pub use dual_head::{BucketConfig, DualHeadModel};
pub use evaluate::{evaluate_predictor, PairPredictor, PredictorAccuracy};
pub use fusion::{fuse, Estimate, FusionConfig, Prediction};
pub use retrieval::{cosine, weighted_average, Neighbor, RetrievalStore, StoreEntry};
pub use train::{
    evaluate_loss, loss_and_gradient, train, Gradient, LossBreakdown, Sample, TrainConfig,
    TrainingLog, TrainingSet,
};

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("retrieval store is empty")]
    RetrievalUnavailable,
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("i/o error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

/// Trained heads, retrieval store and fusion weights.
#[derive(Clone, Debug)]
pub struct Predictor {
    pub head: DualHeadModel,
    pub store: RetrievalStore,
    pub config: FusionConfig,
}

impl Predictor {
    pub fn new(
        head: DualHeadModel,
        store: RetrievalStore,
        config: FusionConfig,
    ) -> Result<Self, PredictorError> {
        config.validate()?;
        Ok(Predictor {
            head,
            store,
            config,
        })
    }

    fn trained(&self, query: &[f64], model: &ModelSpec) -> Result<Estimate, PredictorError> {
        Ok(Estimate {
            capability: self.head.predict_capability(query, &model.embedding)?,
            length: self.head.predict_length(query, &model.embedding)?.1,
        })
    }

    /// Fused predictions for every model. An empty store falls back to the
    /// trained head alone.
    pub fn predict(
        &self,
        embedding: &[f64],
        in_tokens: u64,
        models: &[ModelSpec],
    ) -> Result<Vec<Prediction>, PredictorError> {
        let neighbors = match self.store.retrieve_topk(embedding, self.config.k) {
            Ok(n) => Some(n),
            Err(PredictorError::RetrievalUnavailable) => None,
            Err(e) => return Err(e),
        };
        models
            .iter()
            .map(|m| {
                let trained = self.trained(embedding, m)?;
                Ok(match &neighbors {
                    Some(n) => {
                        let col = self.store.model_index(&m.id)?;
                        let retrieved = Estimate {
                            capability: self.store.capability_from(n, col),
                            length: self.store.length_from(n, col),
                        };
                        fuse(trained, retrieved, &self.config, m, in_tokens)
                    }
                    None => fuse(trained, trained, &self.config.trained_only(), m, in_tokens),
                })
            })
            .collect()
    }

    pub fn predict_dataset(&self, dataset: &Dataset) -> Result<PredictionTable, PredictorError> {
        let mut rows = Vec::with_capacity(dataset.n_queries() * dataset.n_models());
        for q in &dataset.queries {
            rows.extend(self.predict(&q.embedding, q.in_tokens, &dataset.models)?);
        }
        Ok(PredictionTable {
            n_models: dataset.n_models(),
            rows,
        })
    }

    pub fn evaluate(&self, eval_set: &Dataset) -> Result<PredictorAccuracy, PredictorError> {
        evaluate_predictor(self, eval_set, &self.head.buckets)
    }
}

impl PairPredictor for Predictor {
    fn predict_query(
        &self,
        query: &QueryRecord,
        models: &[ModelSpec],
    ) -> Result<Vec<Estimate>, PredictorError> {
        Ok(self
            .predict(&query.embedding, query.in_tokens, models)?
            .into_iter()
            .map(|p| Estimate {
                capability: p.a,
                length: p.length,
            })
            .collect())
    }
}

/// Row-major `queries x models` table of fused predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTable {
    n_models: usize,
    rows: Vec<Prediction>,
}

impl PredictionTable {
    pub fn from_rows(n_models: usize, rows: Vec<Prediction>) -> Self {
        assert!(
            n_models > 0 && rows.len().is_multiple_of(n_models),
            "ragged prediction table"
        );
        PredictionTable { n_models, rows }
    }

    pub fn n_queries(&self) -> usize {
        self.rows.len() / self.n_models
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn row(&self, query: usize) -> &[Prediction] {
        &self.rows[query * self.n_models..(query + 1) * self.n_models]
    }

    pub fn get(&self, query: usize, model: usize) -> &Prediction {
        &self.row(query)[model]
    }
}
