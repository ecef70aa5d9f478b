use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ModelSpec, QueryRecord};

use super::{BucketConfig, PredictorError};

/// Anything that can estimate capability and output length for every model on a query.
pub trait PairPredictor {
    fn predict_query(
        &self,
        query: &QueryRecord,
        models: &[ModelSpec],
    ) -> Result<Vec<super::Estimate>, PredictorError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorAccuracy {
    /// Fraction of pairs where `a >= 0.5` agrees with the observed label.
    pub capability: f64,
    pub exact_bucket: f64,
    pub within_one_bucket: f64,
    pub pairs: usize,
}

pub fn evaluate_predictor<P: PairPredictor + ?Sized>(
    predictor: &P,
    eval_set: &Dataset,
    buckets: &BucketConfig,
) -> Result<PredictorAccuracy, PredictorError> {
    let (mut cap_hits, mut exact, mut near, mut pairs) = (0usize, 0usize, 0usize, 0usize);
    for q in &eval_set.queries {
        let estimates = predictor.predict_query(q, &eval_set.models)?;
        for (m, est) in eval_set.models.iter().zip(&estimates) {
            pairs += 1;
            if (est.capability >= 0.5) == q.is_correct(&m.id) {
                cap_hits += 1;
            }
            let predicted = buckets.bucket_of(est.length as u64);
            let observed = buckets.bucket_of(q.out_tokens_for(&m.id));
            if predicted == observed {
                exact += 1;
            }
            if predicted.abs_diff(observed) <= 1 {
                near += 1;
            }
        }
    }
    let frac = |n: usize| {
        if pairs == 0 {
            0.0
        } else {
            n as f64 / pairs as f64
        }
    };
    Ok(PredictorAccuracy {
        capability: frac(cap_hits),
        exact_bucket: frac(exact),
        within_one_bucket: frac(near),
        pairs,
    })
}
