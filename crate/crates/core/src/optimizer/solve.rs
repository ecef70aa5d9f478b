use serde::{Deserialize, Serialize};

use super::dual::{assign_given_multipliers, dual_value, update_multipliers, StepSizes};
use super::polish::{polish, repair};
use super::{Assignment, Multipliers, RoutingInstance, QUALITY_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    LikelyInfeasible,
}

/// Dual-ascent settings. `None` fields are derived from the instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Base step for the quality multiplier. Default `2 * mean(C) * N / span(A)`.
    pub step_quality: Option<f64>,
    /// Base step for the capacity multipliers. Default `mean(C)`.
    pub step_capacity: Option<f64>,
    pub max_iters: usize,
    /// Default `1e4 * mean(C) * N`.
    pub lambda1_cap: Option<f64>,
    pub stall_window: usize,
    /// Run local search on the best feasible iterate before returning it.
    #[serde(default = "default_polish")]
    pub polish: bool,
}

fn default_polish() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step_quality: None,
            step_capacity: None,
            max_iters: 1000,
            lambda1_cap: None,
            stall_window: 20,
            polish: true,
        }
    }
}

/// Below this mean cost the instance is treated as free and scaled as if
/// every cost were this value.
const MIN_COST_SCALE: f64 = 1e-12;
const STALL_TOLERANCE: f64 = 1e-9;
/// Once an incumbent exists, infeasible iterates are repaired this rarely.
const REPAIR_EVERY: usize = 25;

impl SolverConfig {
    /// Base step sizes before the `1 / sqrt(t)` decay.
    pub fn base_steps(&self, instance: &RoutingInstance) -> StepSizes {
        let mean = instance.mean_cost().max(MIN_COST_SCALE);
        let span = match instance.capability_span() {
            s if s > 0.0 => s,
            _ => 1.0,
        };
        let n = instance.n_queries().max(1) as f64;
        StepSizes {
            quality: self.step_quality.unwrap_or(2.0 * mean * n / span),
            capacity: self.step_capacity.unwrap_or(mean),
        }
    }

    pub fn lambda1_limit(&self, instance: &RoutingInstance) -> f64 {
        let mean = instance.mean_cost().max(MIN_COST_SCALE);
        self.lambda1_cap
            .unwrap_or(1e4 * mean * instance.n_queries().max(1) as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub feasible: bool,
    pub total_cost: f64,
    pub avg_quality: f64,
    pub loads: Vec<u32>,
    pub iterations: usize,
    pub multipliers: Multipliers,
    /// `lambda1 * (alpha - avg_quality)` for the returned assignment.
    pub quality_slack_residual: f64,
    /// `lambda2_j * (L_j - load_j)` for the returned assignment.
    pub capacity_residuals: Vec<f64>,
    /// Dual function at the final multipliers.
    pub dual_value: f64,
    /// Largest dual value seen over all iterates.
    pub best_dual_value: f64,
    pub step_quality: f64,
    pub step_capacity: f64,
}

/// Necessary condition for feasibility: enough slots, and the best model per
/// query reaches the floor on average.
fn certainly_infeasible(instance: &RoutingInstance) -> bool {
    let n = instance.n_queries();
    if n == 0 {
        return false;
    }
    let slots: u64 = instance.capacity().iter().map(|&c| c as u64).sum();
    if slots < n as u64 {
        return true;
    }
    let best: f64 = (0..n)
        .map(|i| {
            instance
                .capability_row(i)
                .iter()
                .copied()
                .fold(0.0, f64::max)
        })
        .sum();
    best / (n as f64) < instance.alpha() - QUALITY_TOLERANCE
}

/// Capacity-respecting placement that greedily maximizes total capability.
///
/// Queries with the widest capability spread pick first; each takes its most
/// capable model with a free slot (ties: cheaper, then lower index). Queries
/// left without a slot are `None`.
pub fn fallback_placement(instance: &RoutingInstance) -> Vec<Option<usize>> {
    let n = instance.n_queries();
    let m = instance.n_models();
    let spread = |i: usize| {
        let row = instance.capability_row(i);
        row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - row.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| spread(b).total_cmp(&spread(a)).then(a.cmp(&b)));
    let mut remaining: Vec<u32> = instance.capacity().to_vec();
    let mut placement = vec![None; n];
    for i in order {
        let pick = (0..m)
            .filter(|&j| remaining[j] > 0)
            .min_by(|&a, &b| capability_rank(instance, i, a, b));
        if let Some(j) = pick {
            remaining[j] -= 1;
            placement[i] = Some(j);
        }
    }
    placement
}

/// Higher capability, then cheaper, then lower index.
fn capability_rank(instance: &RoutingInstance, i: usize, a: usize, b: usize) -> std::cmp::Ordering {
    instance
        .capability(i, b)
        .total_cmp(&instance.capability(i, a))
        .then(instance.cost(i, a).total_cmp(&instance.cost(i, b)))
        .then(a.cmp(&b))
}

/// [`fallback_placement`] with unplaced queries sent to their most capable
/// model regardless of capacity.
pub(crate) fn quality_fallback(instance: &RoutingInstance) -> Assignment {
    let m = instance.n_models();
    Assignment::new(
        fallback_placement(instance)
            .into_iter()
            .enumerate()
            .map(|(i, slot)| {
                slot.unwrap_or_else(|| {
                    (0..m)
                        .min_by(|&a, &b| capability_rank(instance, i, a, b))
                        .expect("instance has at least one model")
                })
            })
            .collect(),
    )
}

fn report(
    instance: &RoutingInstance,
    assignment: &Assignment,
    status: SolveStatus,
    iterations: usize,
    multipliers: Multipliers,
    best_dual_value: f64,
    steps: StepSizes,
) -> SolveReport {
    let avg_quality = instance.avg_quality(assignment);
    let loads = instance.loads(assignment);
    let gap = if instance.n_queries() == 0 {
        0.0
    } else {
        instance.alpha() - avg_quality
    };
    let dual = dual_value(instance, &multipliers);
    SolveReport {
        status,
        feasible: instance.is_feasible(assignment),
        total_cost: instance.total_cost(assignment),
        avg_quality,
        quality_slack_residual: multipliers.lambda1 * gap,
        capacity_residuals: multipliers
            .lambda2
            .iter()
            .zip(loads.iter().zip(instance.capacity()))
            .map(|(l2, (&load, &cap))| l2 * (cap as f64 - load as f64))
            .collect(),
        loads,
        iterations,
        dual_value: dual,
        best_dual_value: best_dual_value.max(dual),
        multipliers,
        step_quality: steps.quality,
        step_capacity: steps.capacity,
    }
}

/// Projected dual ascent from zero multipliers.
///
/// Each iterate routes every query to its minimum reduced-cost model; the
/// cheapest iterate that satisfies both constraint families is kept, then
/// (with `polish`) improved by feasibility-preserving local search. When no
/// iterate is feasible the quality fallback is returned with status
/// `LikelyInfeasible`.
pub fn solve(instance: &RoutingInstance, config: &SolverConfig) -> (Assignment, SolveReport) {
    let m = instance.n_models();
    let steps = config.base_steps(instance);
    let mut multipliers = Multipliers::zeros(m);

    if instance.n_queries() == 0 {
        let empty = Assignment::new(Vec::new());
        let r = report(
            instance,
            &empty,
            SolveStatus::Converged,
            0,
            multipliers,
            f64::NEG_INFINITY,
            steps,
        );
        return (empty, r);
    }
    if certainly_infeasible(instance) {
        let fallback = quality_fallback(instance);
        let r = report(
            instance,
            &fallback,
            SolveStatus::LikelyInfeasible,
            0,
            multipliers,
            f64::NEG_INFINITY,
            steps,
        );
        return (fallback, r);
    }

    let limit = config.lambda1_limit(instance);
    let mut incumbent: Option<(Assignment, f64)> = None;
    let mut best_dual = f64::NEG_INFINITY;
    let mut stalled = 0usize;
    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0usize;

    for t in 1..=config.max_iters.max(1) {
        iterations = t;
        let x = assign_given_multipliers(instance, &multipliers);
        best_dual = best_dual.max(dual_value(instance, &multipliers));
        let candidate = if instance.is_feasible(&x) {
            Some(x.clone())
        } else if incumbent.is_none() || t % REPAIR_EVERY == 0 {
            repair(
                instance,
                &x,
                multipliers.lambda1 / instance.n_queries() as f64,
            )
        } else {
            None
        };
        if let Some(x) = candidate {
            let cost = instance.total_cost(&x);
            if incumbent.as_ref().is_none_or(|(_, best)| cost < *best) {
                incumbent = Some((x.clone(), cost));
            }
        }
        let decay = 1.0 / (t as f64).sqrt();
        let next = update_multipliers(
            &multipliers,
            &x,
            instance,
            StepSizes {
                quality: steps.quality * decay,
                capacity: steps.capacity * decay,
            },
        );
        if next.max_abs_diff(&multipliers) < STALL_TOLERANCE {
            stalled += 1;
        } else {
            stalled = 0;
        }
        multipliers = next;
        if stalled >= config.stall_window.max(1) {
            status = SolveStatus::Converged;
            break;
        }
        if multipliers.lambda1 > limit && incumbent.is_none() {
            status = SolveStatus::LikelyInfeasible;
            break;
        }
    }

    let assignment = match incumbent {
        Some((x, _)) if config.polish => polish(instance, &x),
        Some((x, _)) => x,
        None => {
            status = SolveStatus::LikelyInfeasible;
            let fallback = quality_fallback(instance);
            if config.polish {
                polish(instance, &fallback)
            } else {
                fallback
            }
        }
    };
    let r = report(
        instance,
        &assignment,
        status,
        iterations,
        multipliers,
        best_dual,
        steps,
    );
    (assignment, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inactive_constraints_pick_row_minimum() {
        let inst = RoutingInstance::from_rows(
            &[
                vec![0.3, 0.1, 0.2],
                vec![0.5, 0.6, 0.4],
                vec![0.2, 0.9, 0.8],
            ],
            &vec![vec![0.1, 0.2, 0.3]; 3],
            0.0,
            vec![3, 3, 3],
        )
        .unwrap();
        let (x, r) = solve(&inst, &SolverConfig::default());
        assert_eq!(x.choice, vec![1, 2, 0]);
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.feasible);
        assert!((r.total_cost - 0.7).abs() < 1e-15);
        assert_eq!(r.quality_slack_residual, 0.0);
    }

    #[test]
    fn unreachable_floor_is_likely_infeasible() {
        let inst = RoutingInstance::from_rows(
            &[vec![1.0, 2.0], vec![1.0, 2.0]],
            &[vec![0.3, 0.6], vec![0.5, 0.7]],
            0.9,
            vec![2, 2],
        )
        .unwrap();
        let (x, r) = solve(&inst, &SolverConfig::default());
        assert_eq!(r.status, SolveStatus::LikelyInfeasible);
        assert!(!r.feasible);
        // the fallback still maximizes capability within capacity
        assert_eq!(x.choice, vec![1, 1]);
    }

    #[test]
    fn fallback_respects_capacity() {
        let inst = RoutingInstance::from_rows(
            &[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]],
            &[vec![0.2, 0.9], vec![0.5, 0.6], vec![0.2, 1.0]],
            1.0,
            vec![2, 1],
        )
        .unwrap();
        let x = quality_fallback(&inst);
        assert!(inst.meets_capacity(&x));
        assert_eq!(fallback_placement(&inst), vec![Some(0), Some(0), Some(1)]);
        // widest spread (query 2, then 0) gets the strong model first
        assert_eq!(x.choice, vec![0, 0, 1]);
    }

    #[test]
    fn quality_pressure_moves_to_strong_model() {
        let inst = RoutingInstance::from_rows(
            &[vec![1.0, 5.0], vec![1.0, 5.0], vec![1.0, 5.0]],
            &[vec![0.9, 1.0], vec![0.9, 1.0], vec![0.1, 0.9]],
            0.8,
            vec![3, 3],
        )
        .unwrap();
        let (x, r) = solve(&inst, &SolverConfig::default());
        assert!(r.feasible);
        assert_eq!(x.choice, vec![0, 0, 1]);
        assert!(r.dual_value <= r.total_cost + 1e-9);
    }

    #[test]
    fn empty_window() {
        let inst = RoutingInstance::new(0, 2, vec![], vec![], 0.75, vec![4, 4]).unwrap();
        let (x, r) = solve(&inst, &SolverConfig::default());
        assert!(x.choice.is_empty());
        assert!(r.feasible);
        assert_eq!(r.status, SolveStatus::Converged);
    }

    #[test]
    fn placement_leaves_overflow_unplaced() {
        let inst = RoutingInstance::from_rows(
            &[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]],
            &[vec![0.2, 0.9], vec![0.5, 0.6], vec![0.1, 1.0]],
            0.5,
            vec![1, 1],
        )
        .unwrap();
        // spreads 0.7, 0.1, 0.9: query 2 takes model 1, query 0 model 0
        assert_eq!(fallback_placement(&inst), vec![Some(0), None, Some(1)]);
        assert_eq!(quality_fallback(&inst).choice, vec![0, 1, 1]);
    }

    #[test]
    fn too_few_slots_is_infeasible() {
        let inst = RoutingInstance::from_rows(
            &[vec![1.0], vec![1.0]],
            &[vec![1.0], vec![1.0]],
            0.0,
            vec![1],
        )
        .unwrap();
        let (_, r) = solve(&inst, &SolverConfig::default());
        assert_eq!(r.status, SolveStatus::LikelyInfeasible);
        assert!(!r.feasible);
    }
}
