//! Minimum-cost routing of a batch of queries subject to an average
//! capability floor and per-model capacity, solved by projected dual ascent
//! on the Lagrangian. The per-query equality constraint is enforced by
//! construction (every query gets exactly one model), so only the quality
//! multiplier and the capacity multipliers are carried.

mod brute_force;
mod dual;
mod format;
mod kkt;
mod polish;
mod solve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brute_force::{brute_force, Optimum, BRUTE_FORCE_LIMIT};
pub use dual::{assign_given_multipliers, dual_value, reduced_cost, update_multipliers, StepSizes};
pub use format::{parse_instance, write_instance};
pub use kkt::{check_kkt, KktReport};
pub use polish::polish;
pub use solve::{fallback_placement, solve, SolveReport, SolveStatus, SolverConfig};

/// Slack allowed when comparing average quality against the floor.
pub const QUALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid routing instance: {0}")]
    Invalid(String),
    #[error("instance has {combinations:e} assignments, above the enumeration limit")]
    TooLarge { combinations: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One window's routing problem: `n` queries, `m` models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutingInstance {
    n: usize,
    m: usize,
    /// Row-major `n x m` money cost.
    cost: Vec<f64>,
    /// Row-major `n x m` capability in `[0, 1]`.
    capability: Vec<f64>,
    alpha: f64,
    capacity: Vec<u32>,
}

impl RoutingInstance {
    /// Builds from row-major flat matrices.
    ///
    /// Capacities may be zero: a live window sees a model whose slots are
    /// all busy as having no residual capacity.
    pub fn new(
        n: usize,
        m: usize,
        cost: Vec<f64>,
        capability: Vec<f64>,
        alpha: f64,
        capacity: Vec<u32>,
    ) -> Result<Self, OptimizerError> {
        if m == 0 {
            return Err(OptimizerError::Invalid("need at least one model".into()));
        }
        if cost.len() != n * m || capability.len() != n * m {
            return Err(OptimizerError::Invalid(format!(
                "matrices must be {n} x {m}, got {} and {} entries",
                cost.len(),
                capability.len()
            )));
        }
        if capacity.len() != m {
            return Err(OptimizerError::Invalid(format!(
                "capacity has {} entries for {m} models",
                capacity.len()
            )));
        }
        if let Some(c) = cost.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(OptimizerError::Invalid(format!(
                "cost {c} is not a finite non-negative value"
            )));
        }
        if let Some(a) = capability.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(OptimizerError::Invalid(format!(
                "capability {a} outside [0, 1]"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(OptimizerError::Invalid(format!(
                "alpha {alpha} outside [0, 1]"
            )));
        }
        Ok(RoutingInstance {
            n,
            m,
            cost,
            capability,
            alpha,
            capacity,
        })
    }

    pub fn from_rows(
        cost: &[Vec<f64>],
        capability: &[Vec<f64>],
        alpha: f64,
        capacity: Vec<u32>,
    ) -> Result<Self, OptimizerError> {
        let m = capacity.len();
        if cost.iter().chain(capability).any(|r| r.len() != m) {
            return Err(OptimizerError::Invalid(format!(
                "every row must have {m} entries"
            )));
        }
        RoutingInstance::new(
            cost.len(),
            m,
            cost.concat(),
            capability.concat(),
            alpha,
            capacity,
        )
    }

    pub fn n_queries(&self) -> usize {
        self.n
    }

    pub fn n_models(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn capacity(&self) -> &[u32] {
        &self.capacity
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.m + j]
    }

    pub fn capability(&self, i: usize, j: usize) -> f64 {
        self.capability[i * self.m + j]
    }

    pub fn cost_row(&self, i: usize) -> &[f64] {
        &self.cost[i * self.m..(i + 1) * self.m]
    }

    pub fn capability_row(&self, i: usize) -> &[f64] {
        &self.capability[i * self.m..(i + 1) * self.m]
    }

    /// Same instance with a different quality floor.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, OptimizerError> {
        RoutingInstance::new(
            self.n,
            self.m,
            self.cost.clone(),
            self.capability.clone(),
            alpha,
            self.capacity.clone(),
        )
    }

    /// Same instance with different capacities.
    pub fn with_capacity(&self, capacity: Vec<u32>) -> Result<Self, OptimizerError> {
        RoutingInstance::new(
            self.n,
            self.m,
            self.cost.clone(),
            self.capability.clone(),
            self.alpha,
            capacity,
        )
    }

    pub fn mean_cost(&self) -> f64 {
        if self.cost.is_empty() {
            0.0
        } else {
            self.cost.iter().sum::<f64>() / self.cost.len() as f64
        }
    }

    /// `max(A) - min(A)` over the whole matrix.
    pub fn capability_span(&self) -> f64 {
        let lo = self
            .capability
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .capability
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if self.capability.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    /// Largest per-row `max_j a - min_j a`.
    pub fn max_row_spread(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let row = self.capability_row(i);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    pub fn total_cost(&self, assignment: &Assignment) -> f64 {
        assignment
            .choice
            .iter()
            .enumerate()
            .map(|(i, &j)| self.cost(i, j))
            .sum()
    }

    /// Mean capability of the chosen pairs; 0 for an empty batch.
    pub fn avg_quality(&self, assignment: &Assignment) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let total: f64 = assignment
            .choice
            .iter()
            .enumerate()
            .map(|(i, &j)| self.capability(i, j))
            .sum();
        total / self.n as f64
    }

    pub fn loads(&self, assignment: &Assignment) -> Vec<u32> {
        let mut loads = vec![0u32; self.m];
        for &j in &assignment.choice {
            loads[j] += 1;
        }
        loads
    }

    pub fn meets_quality(&self, assignment: &Assignment) -> bool {
        self.n == 0 || self.avg_quality(assignment) >= self.alpha - QUALITY_TOLERANCE
    }

    pub fn meets_capacity(&self, assignment: &Assignment) -> bool {
        self.loads(assignment)
            .iter()
            .zip(&self.capacity)
            .all(|(l, c)| l <= c)
    }

    pub fn is_feasible(&self, assignment: &Assignment) -> bool {
        assignment.choice.len() == self.n
            && self.meets_quality(assignment)
            && self.meets_capacity(assignment)
    }

    pub fn is_valid(&self, assignment: &Assignment) -> bool {
        assignment.choice.len() == self.n && assignment.choice.iter().all(|&j| j < self.m)
    }
}

/// The model chosen for each query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub choice: Vec<usize>,
}

impl Assignment {
    pub fn new(choice: Vec<usize>) -> Self {
        Assignment { choice }
    }

    /// `n x m` 0/1 matrix with exactly one 1 per row.
    pub fn one_hot(&self, m: usize) -> Vec<Vec<u8>> {
        self.choice
            .iter()
            .map(|&j| (0..m).map(|k| u8::from(k == j)).collect())
            .collect()
    }
}

/// Dual state: the quality multiplier and one capacity multiplier per model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda1: f64,
    pub lambda2: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(m: usize) -> Self {
        Multipliers {
            lambda1: 0.0,
            lambda2: vec![0.0; m],
        }
    }

    pub fn is_dual_feasible(&self) -> bool {
        self.lambda1 >= 0.0 && self.lambda2.iter().all(|&l| l >= 0.0)
    }

    pub(crate) fn max_abs_diff(&self, other: &Multipliers) -> f64 {
        self.lambda2
            .iter()
            .zip(&other.lambda2)
            .map(|(a, b)| (a - b).abs())
            .fold((self.lambda1 - other.lambda1).abs(), f64::max)
    }
}
