use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, DatasetError, Source};

/// Source-stratified disjoint train/eval split.
///
/// Each source contributes `round(count * eval_fraction)` queries to the
/// eval side. Both sides keep the original query order.
pub fn split_train_eval(
    dataset: &Dataset,
    eval_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(DatasetError::Argument(format!(
            "eval fraction {eval_fraction} must lie in (0, 1)"
        )));
    }
    if dataset.n_queries() < 2 {
        return Err(DatasetError::Argument(
            "need at least two queries to split".into(),
        ));
    }
    let mut by_source: BTreeMap<Source, Vec<usize>> = BTreeMap::new();
    for (i, q) in dataset.queries.iter().enumerate() {
        by_source.entry(q.source).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_eval = vec![false; dataset.n_queries()];
    for idx in by_source.values_mut() {
        idx.shuffle(&mut rng);
        let n_eval = (idx.len() as f64 * eval_fraction).round() as usize;
        for &i in &idx[..n_eval] {
            is_eval[i] = true;
        }
    }
    let (eval, train): (Vec<_>, Vec<_>) = dataset
        .queries
        .iter()
        .cloned()
        .zip(&is_eval)
        .partition(|(_, &e)| e);
    if eval.is_empty() || train.is_empty() {
        return Err(DatasetError::Argument(format!(
            "eval fraction {eval_fraction} leaves an empty split of {} queries",
            dataset.n_queries()
        )));
    }
    let strip = |v: Vec<(super::QueryRecord, &bool)>| v.into_iter().map(|(q, _)| q).collect();
    Ok((
        dataset.with_queries(strip(train)),
        dataset.with_queries(strip(eval)),
    ))
}
