//! Per-query greedy routers used as comparison arms.
//!
//! They see the same fused predictions as the constrained router and respect
//! remaining capacity, but ignore the quality floor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::Prediction;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("no model has remaining capacity")]
    CapacityExhausted,
    #[error("{predictions} predictions for {models} capacity entries")]
    Shape { predictions: usize, models: usize },
    #[error("confidence threshold {0} is outside [0, 1]")]
    Threshold(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GreedyPolicy {
    CheapestConfident { confidence_threshold: f64 },
    MaxQuality,
    Random { seed: u64 },
}

impl GreedyPolicy {
    pub const DEFAULT_THRESHOLD: f64 = 0.75;

    pub fn cheapest_confident(confidence_threshold: f64) -> Result<Self, BaselineError> {
        if !(0.0..=1.0).contains(&confidence_threshold) {
            return Err(BaselineError::Threshold(confidence_threshold));
        }
        Ok(GreedyPolicy::CheapestConfident {
            confidence_threshold,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GreedyPolicy::CheapestConfident { .. } => "greedy-cost",
            GreedyPolicy::MaxQuality => "greedy-quality",
            GreedyPolicy::Random { .. } => "random",
        }
    }
}

/// A greedy policy plus the generator state `Random` draws from.
#[derive(Clone, Debug)]
pub struct GreedyRouter {
    policy: GreedyPolicy,
    rng: ChaCha8Rng,
}

fn cheapest(predictions: &[Prediction], candidates: impl Iterator<Item = usize>) -> Option<usize> {
    candidates.min_by(|&a, &b| {
        predictions[a]
            .cost
            .total_cmp(&predictions[b].cost)
            .then(predictions[b].a.total_cmp(&predictions[a].a))
            .then(a.cmp(&b))
    })
}

impl GreedyRouter {
    pub fn new(policy: GreedyPolicy) -> Self {
        let seed = match policy {
            GreedyPolicy::Random { seed } => seed,
            _ => 0,
        };
        GreedyRouter {
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn policy(&self) -> GreedyPolicy {
        self.policy
    }

    /// Picks one model for one query among models with a free slot.
    ///
    /// Ties on cost prefer higher capability, then the lower index; ties on
    /// capability prefer the cheaper model, then the lower index.
    pub fn route(
        &mut self,
        predictions: &[Prediction],
        remaining_capacity: &[u32],
    ) -> Result<usize, BaselineError> {
        if predictions.len() != remaining_capacity.len() {
            return Err(BaselineError::Shape {
                predictions: predictions.len(),
                models: remaining_capacity.len(),
            });
        }
        let free: Vec<usize> = (0..predictions.len())
            .filter(|&j| remaining_capacity[j] > 0)
            .collect();
        if free.is_empty() {
            return Err(BaselineError::CapacityExhausted);
        }
        let pick = match self.policy {
            GreedyPolicy::CheapestConfident {
                confidence_threshold,
            } => cheapest(
                predictions,
                free.iter()
                    .copied()
                    .filter(|&j| predictions[j].a >= confidence_threshold),
            )
            .or_else(|| cheapest(predictions, free.iter().copied())),
            GreedyPolicy::MaxQuality => free.iter().copied().min_by(|&a, &b| {
                predictions[b]
                    .a
                    .total_cmp(&predictions[a].a)
                    .then(predictions[a].cost.total_cmp(&predictions[b].cost))
                    .then(a.cmp(&b))
            }),
            GreedyPolicy::Random { .. } => Some(free[self.rng.gen_range(0..free.len())]),
        };
        Ok(pick.expect("free is non-empty"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, cost: f64) -> Prediction {
        Prediction {
            a,
            cost,
            a_trained: a,
            a_retrieved: a,
            l_trained: 0,
            l_retrieved: 0,
            length: 0,
        }
    }

    #[test]
    fn max_quality_argmax() {
        let mut r = GreedyRouter::new(GreedyPolicy::MaxQuality);
        assert_eq!(r.route(&[p(0.9, 1.0), p(0.7, 0.5)], &[1, 1]), Ok(0));
        assert_eq!(r.route(&[p(0.9, 1.0), p(0.7, 0.5)], &[0, 1]), Ok(1));
        assert_eq!(r.route(&[p(0.8, 2.0), p(0.8, 1.0)], &[1, 1]), Ok(1));
    }

    #[test]
    fn cheapest_confident_threshold() {
        let mut r = GreedyRouter::new(GreedyPolicy::cheapest_confident(0.8).unwrap());
        assert_eq!(r.route(&[p(0.6, 1.0), p(0.9, 5.0)], &[4, 4]), Ok(1));
        assert_eq!(r.route(&[p(0.6, 1.0), p(0.7, 5.0)], &[4, 4]), Ok(0));
        // confident model busy: cheapest free one
        assert_eq!(
            r.route(&[p(0.6, 1.0), p(0.9, 5.0), p(0.5, 0.5)], &[4, 0, 4]),
            Ok(2)
        );
    }

    #[test]
    fn exhausted_capacity_is_an_error() {
        let mut r = GreedyRouter::new(GreedyPolicy::MaxQuality);
        assert_eq!(
            r.route(&[p(0.5, 1.0)], &[0]),
            Err(BaselineError::CapacityExhausted)
        );
        assert!(matches!(
            r.route(&[p(0.5, 1.0)], &[1, 1]),
            Err(BaselineError::Shape { .. })
        ));
    }

    #[test]
    fn threshold_range() {
        assert!(GreedyPolicy::cheapest_confident(1.2).is_err());
        assert!(GreedyPolicy::cheapest_confident(-0.1).is_err());
    }

    #[test]
    fn random_is_seeded_and_capacity_aware() {
        let preds = [p(0.1, 1.0), p(0.2, 1.0), p(0.3, 1.0), p(0.4, 1.0)];
        let draw = |seed| {
            let mut r = GreedyRouter::new(GreedyPolicy::Random { seed });
            (0..50)
                .map(|_| r.route(&preds, &[1, 0, 1, 1]).unwrap())
                .collect::<Vec<_>>()
        };
        let a = draw(3);
        assert_eq!(a, draw(3));
        assert!(!a.contains(&1));
        for j in [0, 2, 3] {
            assert!(a.contains(&j));
        }
    }
}
