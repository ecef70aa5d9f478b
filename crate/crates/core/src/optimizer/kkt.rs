use serde::{Deserialize, Serialize};

use super::{Assignment, Multipliers, RoutingInstance};

/// Primal/dual feasibility flags and complementary-slackness residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub avg_quality: f64,
    pub loads: Vec<u32>,
    pub quality_feasible: bool,
    pub capacity_feasible: Vec<bool>,
    pub lambda1_nonnegative: bool,
    pub lambda2_nonnegative: Vec<bool>,
    /// `lambda1 * (alpha - avg_quality)`.
    pub quality_residual: f64,
    /// `lambda2_j * (L_j - load_j)` per model.
    pub capacity_residuals: Vec<f64>,
}

impl KktReport {
    pub fn primal_feasible(&self) -> bool {
        self.quality_feasible && self.capacity_feasible.iter().all(|&b| b)
    }

    pub fn dual_feasible(&self) -> bool {
        self.lambda1_nonnegative && self.lambda2_nonnegative.iter().all(|&b| b)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.capacity_residuals
            .iter()
            .map(|r| r.abs())
            .fold(self.quality_residual.abs(), f64::max)
    }
}

pub fn check_kkt(
    instance: &RoutingInstance,
    assignment: &Assignment,
    multipliers: &Multipliers,
) -> KktReport {
    let avg_quality = instance.avg_quality(assignment);
    let loads = instance.loads(assignment);
    let quality_gap = if instance.n_queries() == 0 {
        0.0
    } else {
        instance.alpha() - avg_quality
    };
    KktReport {
        avg_quality,
        quality_feasible: instance.meets_quality(assignment),
        capacity_feasible: loads
            .iter()
            .zip(instance.capacity())
            .map(|(l, c)| l <= c)
            .collect(),
        lambda1_nonnegative: multipliers.lambda1 >= 0.0,
        lambda2_nonnegative: multipliers.lambda2.iter().map(|&l| l >= 0.0).collect(),
        quality_residual: multipliers.lambda1 * quality_gap,
        capacity_residuals: multipliers
            .lambda2
            .iter()
            .zip(loads.iter().zip(instance.capacity()))
            .map(|(l2, (&load, &cap))| l2 * (cap as f64 - load as f64))
            .collect(),
        loads,
    }
}
