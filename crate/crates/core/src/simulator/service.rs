use serde::{Deserialize, Serialize};

use super::SimError;
use crate::dataset::{ModelSpec, Tier};

/// Occupancy model: a request holds its slot for `out_tokens / rate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceModel {
    /// Tokens per second for WEAK models.
    pub weak_rate: f64,
    /// Tokens per second for STRONG models.
    pub strong_rate: f64,
    /// Per-model rates overriding the tier defaults, by model position.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_model: Vec<f64>,
    pub min_service_ticks: u64,
}

impl Default for ServiceModel {
    fn default() -> Self {
        ServiceModel {
            weak_rate: 80.0,
            strong_rate: 40.0,
            per_model: Vec::new(),
            min_service_ticks: 1,
        }
    }
}

impl ServiceModel {
    pub fn validate(&self, n_models: usize) -> Result<(), SimError> {
        let ok = |r: f64| r.is_finite() && r > 0.0;
        if !ok(self.weak_rate) || !ok(self.strong_rate) || !self.per_model.iter().all(|&r| ok(r)) {
            return Err(SimError::Config(
                "token rates must be positive and finite".into(),
            ));
        }
        if !self.per_model.is_empty() && self.per_model.len() != n_models {
            return Err(SimError::Config(format!(
                "{} per-model rates for {n_models} models",
                self.per_model.len()
            )));
        }
        if self.min_service_ticks == 0 {
            return Err(SimError::Config(
                "minimum service time must be at least one tick".into(),
            ));
        }
        Ok(())
    }

    pub fn rate(&self, index: usize, model: &ModelSpec) -> f64 {
        if let Some(&r) = self.per_model.get(index) {
            return r;
        }
        match model.tier {
            Tier::Weak => self.weak_rate,
            Tier::Strong => self.strong_rate,
        }
    }

    /// `max(min_service_ticks, ceil(out_tokens / rate / tick))`.
    pub fn service_ticks(
        &self,
        index: usize,
        model: &ModelSpec,
        out_tokens: u64,
        tick_ms: u64,
    ) -> u64 {
        let ticks =
            (out_tokens as f64 * 1000.0 / (self.rate(index, model) * tick_ms as f64)).ceil() as u64;
        ticks.max(self.min_service_ticks)
    }
}
