//! Exact k-nearest-neighbour store over historical query observations.

use crate::dataset::{Dataset, NORM_TOLERANCE};

use super::PredictorError;

/// One historical query with what every model did on it.
#[derive(Clone, Debug, PartialEq)]
pub struct StoreEntry {
    pub id: String,
    pub embedding: Vec<f64>,
    /// Observed correctness per model, in store model order.
    pub capability: Vec<f64>,
    /// Observed output tokens per model, in store model order.
    pub length: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub similarity: f64,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Similarity-weighted mean of `(similarity, value)` pairs.
///
/// Similarities are clamped to `[0, 1]`; if every weight is zero the plain
/// mean is returned. Returns `None` for an empty input.
pub fn weighted_average<I>(pairs: I) -> Option<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let (mut num, mut den, mut plain, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (sim, value) in pairs {
        let w = sim.clamp(0.0, 1.0);
        num += w * value;
        den += w;
        plain += value;
        n += 1;
    }
    match n {
        0 => None,
        _ if den > 0.0 => Some(num / den),
        _ => Some(plain / n as f64),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalStore {
    model_ids: Vec<String>,
    dim: usize,
    l_max: u32,
    entries: Vec<StoreEntry>,
}

impl RetrievalStore {
    pub fn new(model_ids: Vec<String>, dim: usize, l_max: u32) -> Self {
        RetrievalStore {
            model_ids,
            dim,
            l_max,
            entries: Vec::new(),
        }
    }

    /// Store holding every query of `dataset` (normally the training split).
    pub fn from_dataset(dataset: &Dataset) -> Result<Self, PredictorError> {
        let model_ids: Vec<String> = dataset.models.iter().map(|m| m.id.clone()).collect();
        let mut store = RetrievalStore::new(model_ids, dataset.embedding_dim, dataset.l_max);
        for q in &dataset.queries {
            let capability = dataset
                .models
                .iter()
                .map(|m| if q.is_correct(&m.id) { 1.0 } else { 0.0 })
                .collect();
            let length = dataset
                .models
                .iter()
                .map(|m| q.out_tokens_for(&m.id).min(dataset.l_max as u64) as u32)
                .collect();
            store.insert(StoreEntry {
                id: q.id.clone(),
                embedding: q.embedding.clone(),
                capability,
                length,
            })?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, entry: StoreEntry) -> Result<(), PredictorError> {
        if entry.embedding.len() != self.dim {
            return Err(PredictorError::Dimension {
                expected: self.dim,
                got: entry.embedding.len(),
            });
        }
        let norm = entry.embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(PredictorError::Argument(format!(
                "store entry `{}` is not unit-norm ({norm})",
                entry.id
            )));
        }
        if entry.capability.len() != self.model_ids.len()
            || entry.length.len() != self.model_ids.len()
        {
            return Err(PredictorError::Argument(format!(
                "store entry `{}` does not cover all {} models",
                entry.id,
                self.model_ids.len()
            )));
        }
        if entry.capability.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(PredictorError::Argument(format!(
                "store entry `{}` has capability outside [0, 1]",
                entry.id
            )));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn model_index(&self, model_id: &str) -> Result<usize, PredictorError> {
        self.model_ids
            .iter()
            .position(|m| m == model_id)
            .ok_or_else(|| PredictorError::UnknownModel(model_id.to_string()))
    }

    /// The `min(k, len)` most similar entries, most similar first. Equal
    /// similarities keep insertion order.
    pub fn retrieve_topk(&self, query: &[f64], k: usize) -> Result<Vec<Neighbor>, PredictorError> {
        if self.entries.is_empty() {
            return Err(PredictorError::RetrievalUnavailable);
        }
        if k == 0 {
            return Err(PredictorError::Argument("k must be positive".into()));
        }
        if query.len() != self.dim {
            return Err(PredictorError::Dimension {
                expected: self.dim,
                got: query.len(),
            });
        }
        let qnorm = query.iter().map(|x| x * x).sum::<f64>().sqrt();
        let unit_query = (qnorm - 1.0).abs() <= NORM_TOLERANCE;
        let mut scored: Vec<Neighbor> = self
            .entries
            .iter()
            .enumerate()
            .map(|(index, e)| Neighbor {
                index,
                similarity: if unit_query {
                    // entries are unit-norm; skip the two extra norms
                    e.embedding.iter().zip(query).map(|(a, b)| a * b).sum()
                } else {
                    cosine(&e.embedding, query)
                },
            })
            .collect();
        // stable sort keeps ascending index among equal similarities
        scored.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
        scored.truncate(k);
        Ok(scored)
    }

    pub fn capability_from(&self, neighbors: &[Neighbor], model: usize) -> f64 {
        weighted_average(
            neighbors
                .iter()
                .map(|n| (n.similarity, self.entries[n.index].capability[model])),
        )
        .unwrap_or(0.0)
    }

    pub fn length_from(&self, neighbors: &[Neighbor], model: usize) -> u32 {
        let avg = weighted_average(
            neighbors
                .iter()
                .map(|n| (n.similarity, self.entries[n.index].length[model] as f64)),
        )
        .unwrap_or(0.0);
        (avg.round() as u32).min(self.l_max)
    }

    pub fn capability_retrieve(
        &self,
        query: &[f64],
        model_id: &str,
        k: usize,
    ) -> Result<f64, PredictorError> {
        let model = self.model_index(model_id)?;
        Ok(self.capability_from(&self.retrieve_topk(query, k)?, model))
    }

    pub fn length_retrieve(
        &self,
        query: &[f64],
        model_id: &str,
        k: usize,
    ) -> Result<u32, PredictorError> {
        let model = self.model_index(model_id)?;
        Ok(self.length_from(&self.retrieve_topk(query, k)?, model))
    }
}
