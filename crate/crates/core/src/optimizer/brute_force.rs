use super::{Assignment, OptimizerError, RoutingInstance, QUALITY_TOLERANCE};

/// Largest `M^N` the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

#[derive(Clone, Debug, PartialEq)]
pub enum Optimum {
    Feasible { assignment: Assignment, cost: f64 },
    Infeasible,
}

impl Optimum {
    pub fn cost(&self) -> Option<f64> {
        match self {
            Optimum::Feasible { cost, .. } => Some(*cost),
            Optimum::Infeasible => None,
        }
    }

    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            Optimum::Feasible { assignment, .. } => Some(assignment),
            Optimum::Infeasible => None,
        }
    }
}

struct Search<'a> {
    inst: &'a RoutingInstance,
    /// `suffix_best_quality[i]`: best achievable capability sum over queries `i..`.
    suffix_best_quality: Vec<f64>,
    loads: Vec<u32>,
    path: Vec<usize>,
    best: Option<(Vec<usize>, f64)>,
}

impl Search<'_> {
    fn visit(&mut self, i: usize, cost: f64, quality: f64) {
        let n = self.inst.n_queries();
        if let Some((_, best)) = &self.best {
            // strict, so an equal-cost later leaf can never replace the incumbent
            if cost > *best {
                return;
            }
        }
        // loose bound for pruning; leaves are checked exactly below
        let floor = self.inst.alpha() * n as f64 - 2.0 * QUALITY_TOLERANCE * n as f64;
        if quality + self.suffix_best_quality[i] < floor {
            return;
        }
        if i == n {
            if !self.inst.meets_quality(&Assignment::new(self.path.clone())) {
                return;
            }
            let better = match &self.best {
                None => true,
                Some((_, best)) => cost < *best,
            };
            if better {
                self.best = Some((self.path.clone(), cost));
            }
            return;
        }
        for j in 0..self.inst.n_models() {
            if self.loads[j] >= self.inst.capacity()[j] {
                continue;
            }
            self.loads[j] += 1;
            self.path.push(j);
            self.visit(
                i + 1,
                cost + self.inst.cost(i, j),
                quality + self.inst.capability(i, j),
            );
            self.path.pop();
            self.loads[j] -= 1;
        }
    }
}

/// Exact optimum by enumerating all `M^N` assignments in lexicographic order.
///
/// Among equal-cost optima the lexicographically smallest choice vector wins.
pub fn brute_force(instance: &RoutingInstance) -> Result<Optimum, OptimizerError> {
    let combinations = (instance.n_models() as f64).powi(instance.n_queries() as i32);
    if combinations > BRUTE_FORCE_LIMIT {
        return Err(OptimizerError::TooLarge { combinations });
    }
    let n = instance.n_queries();
    let mut suffix_best_quality = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let best = instance
            .capability_row(i)
            .iter()
            .copied()
            .fold(0.0, f64::max);
        suffix_best_quality[i] = suffix_best_quality[i + 1] + best;
    }
    let mut search = Search {
        inst: instance,
        suffix_best_quality,
        loads: vec![0; instance.n_models()],
        path: Vec::with_capacity(n),
        best: None,
    };
    search.visit(0, 0.0, 0.0);
    Ok(match search.best {
        // re-derive cost and feasibility with the instance's own accounting
        Some((choice, _)) => {
            let assignment = Assignment::new(choice);
            debug_assert!(instance.is_feasible(&assignment));
            Optimum::Feasible {
                cost: instance.total_cost(&assignment),
                assignment,
            }
        }
        None => Optimum::Infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_option() {
        let i = RoutingInstance::from_rows(&[vec![1.0, 2.0]], &[vec![1.0, 1.0]], 0.5, vec![1, 1])
            .unwrap();
        let opt = brute_force(&i).unwrap();
        assert_eq!(opt.assignment().unwrap().choice, vec![0]);
        assert_eq!(opt.cost(), Some(1.0));
    }

    #[test]
    fn pigeonhole_is_infeasible() {
        let i = RoutingInstance::from_rows(
            &[vec![1.0], vec![1.0]],
            &[vec![1.0], vec![1.0]],
            0.0,
            vec![1],
        )
        .unwrap();
        assert_eq!(brute_force(&i).unwrap(), Optimum::Infeasible);
    }

    #[test]
    fn quality_forces_expensive_model() {
        // cheap model 0 answers queries 0 and 1 well but query 2 badly;
        // alpha = 0.8 needs sum a >= 2.4
        let i = RoutingInstance::from_rows(
            &[vec![1.0, 5.0], vec![1.0, 5.0], vec![1.0, 5.0]],
            &[vec![0.9, 1.0], vec![0.9, 1.0], vec![0.1, 0.9]],
            0.8,
            vec![3, 3],
        )
        .unwrap();
        // all 8 assignments (choice: sum a, cost):
        // 000: 1.9, 3   001: 2.7, 7   010: 2.0, 7   011: 2.8, 11
        // 100: 2.0, 7   101: 2.8, 11  110: 2.1, 11  111: 2.9, 15
        // feasible: 001, 011, 101, 111 -> cheapest is 001 at 7
        let opt = brute_force(&i).unwrap();
        assert_eq!(opt.assignment().unwrap().choice, vec![0, 0, 1]);
        assert_eq!(opt.cost(), Some(7.0));
    }

    #[test]
    fn equal_cost_ties_pick_lexicographically_smallest() {
        let i = RoutingInstance::from_rows(
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            0.5,
            vec![1, 1],
        )
        .unwrap();
        assert_eq!(
            brute_force(&i).unwrap().assignment().unwrap().choice,
            vec![0, 1]
        );
    }

    #[test]
    fn size_guard() {
        let n = 15;
        let i = RoutingInstance::new(
            n,
            3,
            vec![1.0; n * 3],
            vec![1.0; n * 3],
            0.0,
            vec![n as u32; 3],
        )
        .unwrap();
        assert!(matches!(
            brute_force(&i),
            Err(OptimizerError::TooLarge { .. })
        ));
    }

    #[test]
    fn empty_instance_is_free() {
        let i = RoutingInstance::new(0, 2, vec![], vec![], 0.9, vec![0, 0]).unwrap();
        assert_eq!(brute_force(&i).unwrap().cost(), Some(0.0));
    }
}
