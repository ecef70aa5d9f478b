use serde::{Deserialize, Serialize};

use crate::dataset::{token_cost, ModelSpec};

use super::PredictorError;

/// Interpolation weights between the trained head (`gamma`, `delta`) and
/// retrieval (`1 - gamma`, `1 - delta`), plus the neighbour count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub gamma: f64,
    pub delta: f64,
    pub k: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            gamma: 0.5,
            delta: 0.5,
            k: 16,
        }
    }
}

impl FusionConfig {
    pub fn new(gamma: f64, delta: f64, k: usize) -> Result<Self, PredictorError> {
        let cfg = FusionConfig { gamma, delta, k };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.delta) {
            return Err(PredictorError::Argument(format!(
                "gamma {} and delta {} must lie in [0, 1]",
                self.gamma, self.delta
            )));
        }
        if self.k == 0 {
            return Err(PredictorError::Argument("k must be positive".into()));
        }
        Ok(())
    }

    /// Weights used when no retrieval result exists.
    pub fn trained_only(&self) -> Self {
        FusionConfig {
            gamma: 1.0,
            delta: 1.0,
            k: self.k,
        }
    }
}

/// Capability and output length from one of the two estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub capability: f64,
    pub length: u32,
}

/// Fused capability and cost for one query-model pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub a: f64,
    /// Expected cost in dollars, input tokens included.
    pub cost: f64,
    pub a_trained: f64,
    pub a_retrieved: f64,
    pub l_trained: u32,
    pub l_retrieved: u32,
    /// `delta * l_trained + (1 - delta) * l_retrieved`, rounded.
    pub length: u32,
}

pub fn fuse(
    trained: Estimate,
    retrieved: Estimate,
    config: &FusionConfig,
    model: &ModelSpec,
    in_tokens: u64,
) -> Prediction {
    let (g, d) = (config.gamma, config.delta);
    let a = g * trained.capability + (1.0 - g) * retrieved.capability;
    let input = token_cost(model, in_tokens, 0).dollars();
    let out_trained = token_cost(model, 0, trained.length as u64).dollars();
    let out_retrieved = token_cost(model, 0, retrieved.length as u64).dollars();
    let cost = input + d * out_trained + (1.0 - d) * out_retrieved;
    let length = (d * trained.length as f64 + (1.0 - d) * retrieved.length as f64).round() as u32;
    Prediction {
        a,
        cost,
        a_trained: trained.capability,
        a_retrieved: retrieved.capability,
        l_trained: trained.length,
        l_retrieved: retrieved.length,
        length,
    }
}
