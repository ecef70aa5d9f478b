//! Query/model records, price tables, difficulty labels and splits.

mod embed;
mod io;
mod split;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::{Money, TokenPrice};

pub use embed::{normalize, EmbeddingProvider, HashedEmbedder, DEFAULT_EMBEDDING_DIM};
pub use io::{
    load_dataset, read_embeddings, save_dataset, sidecar_path, DatasetPaths, EmbedderKind,
    LoadOptions,
};
pub use split::split_train_eval;

/// Default cap on output tokens per response.
pub const DEFAULT_L_MAX: u32 = 1024;

/// Tolerance on embedding norms accepted without re-normalization.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("no precomputed embedding for id `{0}`")]
    Lookup(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("correct count {correct} exceeds model count {total}")]
    CorrectCount { correct: usize, total: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Source {
    Mmlu,
    Gpqa,
    Math500,
    Gsm8k,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tier {
    Weak,
    Strong,
}

impl Tier {
    pub const ALL: [Tier; 2] = [Tier::Weak, Tier::Strong];

    pub fn index(self) -> usize {
        match self {
            Tier::Weak => 0,
            Tier::Strong => 1,
        }
    }
}

/// A candidate model with its price sheet and concurrency cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: String,
    pub name: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedding: Vec<f64>,
    pub price_in: TokenPrice,
    pub price_out: TokenPrice,
    pub tier: Tier,
    pub concurrency_limit: u32,
}

/// One query with ground-truth correctness and output length per model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub text: String,
    pub source: Source,
    pub in_tokens: u64,
    pub correctness: BTreeMap<String, u8>,
    pub out_tokens: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedding: Vec<f64>,
}

impl QueryRecord {
    pub fn is_correct(&self, model_id: &str) -> bool {
        self.correctness.get(model_id).copied() == Some(1)
    }

    pub fn out_tokens_for(&self, model_id: &str) -> u64 {
        self.out_tokens.get(model_id).copied().unwrap_or(0)
    }

    pub fn correct_count(&self) -> usize {
        self.correctness.values().filter(|&&v| v == 1).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn index(self) -> usize {
        match self {
            Difficulty::Easy => 0,
            Difficulty::Medium => 1,
            Difficulty::Hard => 2,
        }
    }

    /// Bands on the fraction of models answering correctly: at least 0.8 is
    /// easy, at least 0.4 is medium. With ten models this is exactly
    /// {8,9,10} / {4..7} / {0..3}.
    pub fn from_counts(correct: usize, total: usize) -> Result<Self, DatasetError> {
        if correct > total || total == 0 {
            return Err(DatasetError::CorrectCount { correct, total });
        }
        // integer comparison so the band edges are exact
        Ok(if correct * 10 >= total * 8 {
            Difficulty::Easy
        } else if correct * 10 >= total * 4 {
            Difficulty::Medium
        } else {
            Difficulty::Hard
        })
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "EASY",
            Difficulty::Medium => "MEDIUM",
            Difficulty::Hard => "HARD",
        })
    }
}

pub fn label_difficulty(
    record: &QueryRecord,
    total_models: usize,
) -> Result<Difficulty, DatasetError> {
    Difficulty::from_counts(record.correct_count(), total_models)
}

/// Money charged by `model` for a call with the given token counts.
pub fn token_cost(model: &ModelSpec, in_tokens: u64, out_tokens: u64) -> Money {
    model.price_in.cost(in_tokens) + model.price_out.cost(out_tokens)
}

/// Validated collection of queries and models.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub queries: Vec<QueryRecord>,
    pub models: Vec<ModelSpec>,
    pub l_max: u32,
    pub embedding_dim: usize,
}

impl Dataset {
    pub fn new(
        queries: Vec<QueryRecord>,
        models: Vec<ModelSpec>,
        l_max: u32,
    ) -> Result<Self, DatasetError> {
        let embedding_dim = models
            .first()
            .map(|m| m.embedding.len())
            .or_else(|| queries.first().map(|q| q.embedding.len()))
            .unwrap_or(0);
        let dataset = Dataset {
            queries,
            models,
            l_max,
            embedding_dim,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.l_max == 0 {
            return Err(DatasetError::Schema("l_max must be positive".into()));
        }
        let mut model_ids = HashSet::new();
        for m in &self.models {
            if !model_ids.insert(m.id.as_str()) {
                return Err(DatasetError::Schema(format!(
                    "duplicate model id `{}`",
                    m.id
                )));
            }
            if m.concurrency_limit == 0 {
                return Err(DatasetError::Schema(format!(
                    "model `{}` has zero concurrency limit",
                    m.id
                )));
            }
            check_embedding(&m.id, &m.embedding, self.embedding_dim)?;
        }
        let mut query_ids = HashSet::new();
        for q in &self.queries {
            if !query_ids.insert(q.id.as_str()) {
                return Err(DatasetError::Schema(format!(
                    "duplicate query id `{}`",
                    q.id
                )));
            }
            check_embedding(&q.id, &q.embedding, self.embedding_dim)?;
            check_model_keys(q, &self.models, "correctness", q.correctness.keys())?;
            check_model_keys(q, &self.models, "out_tokens", q.out_tokens.keys())?;
            if let Some((k, v)) = q.correctness.iter().find(|(_, &v)| v > 1) {
                return Err(DatasetError::Schema(format!(
                    "query `{}` has correctness {v} for `{k}`, expected 0 or 1",
                    q.id
                )));
            }
            if let Some((k, v)) = q.out_tokens.iter().find(|(_, &v)| v > self.l_max as u64) {
                return Err(DatasetError::Schema(format!(
                    "query `{}` has {v} output tokens for `{k}`, above l_max {}",
                    q.id, self.l_max
                )));
            }
        }
        Ok(())
    }

    pub fn n_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn model_index(&self, id: &str) -> Option<usize> {
        self.models.iter().position(|m| m.id == id)
    }

    /// Same models and settings, different query set.
    pub fn with_queries(&self, queries: Vec<QueryRecord>) -> Dataset {
        Dataset {
            queries,
            models: self.models.clone(),
            l_max: self.l_max,
            embedding_dim: self.embedding_dim,
        }
    }

    pub fn difficulty(&self, query: &QueryRecord) -> Difficulty {
        // validated datasets cannot have more correct answers than models
        label_difficulty(query, self.n_models()).unwrap_or(Difficulty::Hard)
    }
}

fn check_embedding(id: &str, embedding: &[f64], dim: usize) -> Result<(), DatasetError> {
    if embedding.len() != dim {
        return Err(DatasetError::Schema(format!(
            "embedding for `{id}` has dimension {}, expected {dim}",
            embedding.len()
        )));
    }
    if dim > 0 {
        let norm = embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(DatasetError::Schema(format!(
                "embedding for `{id}` has norm {norm}, expected unit norm"
            )));
        }
    }
    Ok(())
}

fn check_model_keys<'a>(
    query: &QueryRecord,
    models: &[ModelSpec],
    field: &str,
    keys: impl ExactSizeIterator<Item = &'a String>,
) -> Result<(), DatasetError> {
    let len = keys.len();
    let keys: HashSet<&str> = keys.map(String::as_str).collect();
    if let Some(missing) = models.iter().find(|m| !keys.contains(m.id.as_str())) {
        return Err(DatasetError::Schema(format!(
            "query `{}` {field} is missing model `{}`",
            query.id, missing.id
        )));
    }
    if len != models.len() {
        return Err(DatasetError::Schema(format!(
            "query `{}` {field} has keys for unknown models",
            query.id
        )));
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn ten_models() -> Vec<ModelSpec> {
        PRICE_TABLE
            .iter()
            .map(|&(id, i, o, t)| model(id, i, o, t))
            .collect()
    }

    #[test]
    fn difficulty_brackets_for_ten_models() {
        let models = ten_models();
        for correct in 0..=10usize {
            let flags: Vec<u8> = (0..10).map(|j| u8::from(j < correct)).collect();
            let q = query("q", &models, &flags, &[1; 10]);
            let expected = match correct {
                8..=10 => Difficulty::Easy,
                4..=7 => Difficulty::Medium,
                _ => Difficulty::Hard,
            };
            assert_eq!(
                label_difficulty(&q, 10).unwrap(),
                expected,
                "{correct} correct"
            );
        }
    }

    #[test]
    fn difficulty_named_examples() {
        assert_eq!(Difficulty::from_counts(9, 10).unwrap(), Difficulty::Easy);
        assert_eq!(Difficulty::from_counts(5, 10).unwrap(), Difficulty::Medium);
        assert_eq!(Difficulty::from_counts(0, 10).unwrap(), Difficulty::Hard);
    }

    #[test]
    fn difficulty_rejects_impossible_count() {
        assert!(matches!(
            Difficulty::from_counts(11, 10),
            Err(DatasetError::CorrectCount {
                correct: 11,
                total: 10
            })
        ));
    }

    #[test]
    fn difficulty_bands_scale_with_model_count() {
        // five models: 4/5 = 0.8 easy, 2/5 = 0.4 medium, 1/5 hard
        assert_eq!(Difficulty::from_counts(4, 5).unwrap(), Difficulty::Easy);
        assert_eq!(Difficulty::from_counts(3, 5).unwrap(), Difficulty::Medium);
        assert_eq!(Difficulty::from_counts(2, 5).unwrap(), Difficulty::Medium);
        assert_eq!(Difficulty::from_counts(1, 5).unwrap(), Difficulty::Hard);
    }

    #[test]
    fn token_cost_examples() {
        let models = ten_models();
        let mini = &models[6];
        assert_eq!(token_cost(mini, 1_000_000, 1_000_000).dollars(), 0.75);
        assert_eq!(token_cost(&models[3], 0, 0), Money::ZERO);
        let flash = &models[8];
        // 1e5 * 0.075/1e6 + 2e5 * 0.3/1e6 = 0.0075 + 0.06
        assert_eq!(
            token_cost(flash, 100_000, 200_000),
            Money::from_picos(67_500_000_000)
        );
        assert_eq!(token_cost(flash, 100_000, 200_000).dollars(), 0.0675);
    }

    #[test]
    fn rejects_missing_model_key() {
        let models = ten_models();
        let mut q = query("q", &models, &[1; 10], &[5; 10]);
        q.correctness.remove("gpt-4o");
        let err = Dataset::new(vec![q], models, DEFAULT_L_MAX).unwrap_err();
        assert!(matches!(err, DatasetError::Schema(msg) if msg.contains("gpt-4o")));
    }

    #[test]
    fn rejects_out_tokens_above_l_max() {
        let models = ten_models();
        let q = query("q", &models, &[1; 10], &[2000; 10]);
        assert!(Dataset::new(vec![q], models, DEFAULT_L_MAX).is_err());
    }

    #[test]
    fn rejects_duplicate_ids() {
        let models = ten_models();
        let q = query("q", &models, &[1; 10], &[5; 10]);
        assert!(Dataset::new(vec![q.clone(), q], models.clone(), DEFAULT_L_MAX).is_err());
        let mut dup = models.clone();
        dup.push(models[0].clone());
        assert!(Dataset::new(vec![], dup, DEFAULT_L_MAX).is_err());
    }

    proptest::proptest! {
        #[test]
        fn token_cost_is_linear(
            idx in 0usize..10,
            a in 0u64..10_000_000, b in 0u64..10_000_000,
            c in 0u64..10_000_000, d in 0u64..10_000_000,
        ) {
            let m = ten_models().swap_remove(idx);
            proptest::prop_assert_eq!(
                token_cost(&m, a + b, c + d),
                token_cost(&m, a, c) + token_cost(&m, b, d)
            );
        }

        #[test]
        fn difficulty_partitions_counts(total in 1usize..50) {
            let mut seen = [0usize; 3];
            for correct in 0..=total {
                seen[Difficulty::from_counts(correct, total).unwrap().index()] += 1;
            }
            proptest::prop_assert_eq!(seen.iter().sum::<usize>(), total + 1);
        }
    }
}
