use std::cmp::Ordering;

use super::{Assignment, Multipliers, RoutingInstance};

/// `c_ij - lambda1 * a_ij / N + lambda2_j`.
pub fn reduced_cost(
    instance: &RoutingInstance,
    i: usize,
    j: usize,
    multipliers: &Multipliers,
) -> f64 {
    let n = instance.n_queries().max(1) as f64;
    instance.cost(i, j) - multipliers.lambda1 * instance.capability(i, j) / n
        + multipliers.lambda2[j]
}

/// Ranks model `a` against `b` for query `i`: lower reduced cost, then higher
/// capability, then lower index.
fn better(instance: &RoutingInstance, i: usize, a: (usize, f64), b: (usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1)
        .then_with(|| {
            instance
                .capability(i, b.0)
                .total_cmp(&instance.capability(i, a.0))
        })
        .then_with(|| a.0.cmp(&b.0))
}

fn best_model(instance: &RoutingInstance, i: usize, multipliers: &Multipliers) -> (usize, f64) {
    (0..instance.n_models())
        .map(|j| (j, reduced_cost(instance, i, j, multipliers)))
        .min_by(|&a, &b| better(instance, i, a, b))
        .expect("instance has at least one model")
}

/// Routes every query to its minimum reduced-cost model.
pub fn assign_given_multipliers(
    instance: &RoutingInstance,
    multipliers: &Multipliers,
) -> Assignment {
    Assignment::new(
        (0..instance.n_queries())
            .map(|i| best_model(instance, i, multipliers).0)
            .collect(),
    )
}

/// Step lengths for one projected ascent step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSizes {
    pub quality: f64,
    pub capacity: f64,
}

/// One projected gradient-ascent step on the dual.
pub fn update_multipliers(
    multipliers: &Multipliers,
    assignment: &Assignment,
    instance: &RoutingInstance,
    steps: StepSizes,
) -> Multipliers {
    let quality_gap = if instance.n_queries() == 0 {
        0.0
    } else {
        instance.alpha() - instance.avg_quality(assignment)
    };
    let loads = instance.loads(assignment);
    Multipliers {
        lambda1: (multipliers.lambda1 + steps.quality * quality_gap).max(0.0),
        lambda2: multipliers
            .lambda2
            .iter()
            .zip(loads.iter().zip(instance.capacity()))
            .map(|(&l2, (&load, &cap))| (l2 + steps.capacity * (load as f64 - cap as f64)).max(0.0))
            .collect(),
    }
}

/// Lagrangian dual function `g(lambda)`, a lower bound on every feasible cost.
pub fn dual_value(instance: &RoutingInstance, multipliers: &Multipliers) -> f64 {
    let rows: f64 = (0..instance.n_queries())
        .map(|i| best_model(instance, i, multipliers).1)
        .sum();
    let capacity_term: f64 = multipliers
        .lambda2
        .iter()
        .zip(instance.capacity())
        .map(|(l, &c)| l * c as f64)
        .sum();
    rows + multipliers.lambda1 * instance.alpha() - capacity_term
}
