use super::{Assignment, RoutingInstance, QUALITY_TOLERANCE};

/// Swap search is quadratic in the batch; larger batches only try moves.
const SWAP_LIMIT: usize = 256;
const MAX_ROUNDS: usize = 200;

struct State<'a> {
    inst: &'a RoutingInstance,
    choice: Vec<usize>,
    loads: Vec<u32>,
    quality_sum: f64,
    floor: f64,
}

impl State<'_> {
    fn keeps_floor(&self, delta_quality: f64) -> bool {
        self.quality_sum + delta_quality >= self.floor
    }

    /// Best cost-reducing reassignment of one query to a model with a free slot.
    fn best_move(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, &cur) in self.choice.iter().enumerate() {
            for j in 0..self.inst.n_models() {
                if j == cur || self.loads[j] >= self.inst.capacity()[j] {
                    continue;
                }
                let dc = self.inst.cost(i, j) - self.inst.cost(i, cur);
                let dq = self.inst.capability(i, j) - self.inst.capability(i, cur);
                if dc < 0.0 && self.keeps_floor(dq) && best.is_none_or(|b| dc < b.2) {
                    best = Some((i, j, dc));
                }
            }
        }
        best
    }

    /// Best cost-reducing exchange of models between two queries.
    fn best_swap(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        let n = self.choice.len();
        for i in 0..n {
            for k in i + 1..n {
                let (ji, jk) = (self.choice[i], self.choice[k]);
                if ji == jk {
                    continue;
                }
                let c = |q, j| self.inst.cost(q, j);
                let a = |q, j| self.inst.capability(q, j);
                let dc = c(i, jk) + c(k, ji) - c(i, ji) - c(k, jk);
                let dq = a(i, jk) + a(k, ji) - a(i, ji) - a(k, jk);
                if dc < 0.0 && self.keeps_floor(dq) && best.is_none_or(|b| dc < b.2) {
                    best = Some((i, k, dc));
                }
            }
        }
        best
    }

    fn reassign(&mut self, i: usize, j: usize) {
        let cur = self.choice[i];
        self.quality_sum += self.inst.capability(i, j) - self.inst.capability(i, cur);
        self.loads[cur] -= 1;
        self.loads[j] += 1;
        self.choice[i] = j;
    }
}

/// Steepest-descent local search over single moves and pairwise swaps.
///
/// Input must be feasible; every accepted step keeps it feasible and strictly
/// lowers total cost. Returns the input unchanged if the result fails the
/// instance's own feasibility check.
pub fn polish(instance: &RoutingInstance, assignment: &Assignment) -> Assignment {
    let n = instance.n_queries();
    if n == 0 || !instance.is_feasible(assignment) {
        return assignment.clone();
    }
    let mut state = State {
        inst: instance,
        choice: assignment.choice.clone(),
        loads: instance.loads(assignment),
        quality_sum: instance.avg_quality(assignment) * n as f64,
        // half the tolerance absorbs drift in the running sum
        floor: (instance.alpha() - QUALITY_TOLERANCE / 2.0) * n as f64,
    };
    for _ in 0..MAX_ROUNDS {
        let mv = state.best_move();
        let swap = if n <= SWAP_LIMIT {
            state.best_swap()
        } else {
            None
        };
        match (mv, swap) {
            (Some(m), Some(s)) if s.2 < m.2 => {
                let (ji, jk) = (state.choice[s.0], state.choice[s.1]);
                state.reassign(s.0, jk);
                state.reassign(s.1, ji);
            }
            (Some((i, j, _)), _) => state.reassign(i, j),
            (None, Some((i, k, _))) => {
                let (ji, jk) = (state.choice[i], state.choice[k]);
                state.reassign(i, jk);
                state.reassign(k, ji);
            }
            (None, None) => break,
        }
    }
    let polished = Assignment::new(state.choice);
    if instance.is_feasible(&polished)
        && instance.total_cost(&polished) <= instance.total_cost(assignment)
    {
        polished
    } else {
        assignment.clone()
    }
}

/// Ranks a quality-raising step: cost-free gains first, then gain per unit
/// of extra cost.
fn upgrade_score(dq: f64, dc: f64) -> (bool, f64) {
    if dc <= 0.0 {
        (true, dq)
    } else {
        (false, dq / dc)
    }
}

fn better(a: (bool, f64), b: (bool, f64)) -> bool {
    a.0 && !b.0 || a.0 == b.0 && a.1 > b.1
}

impl State<'_> {
    fn best_upgrade_move(&self) -> Option<(usize, usize, (bool, f64))> {
        let mut best: Option<(usize, usize, (bool, f64))> = None;
        for (i, &cur) in self.choice.iter().enumerate() {
            for j in 0..self.inst.n_models() {
                if j == cur || self.loads[j] >= self.inst.capacity()[j] {
                    continue;
                }
                let dq = self.inst.capability(i, j) - self.inst.capability(i, cur);
                if dq <= 0.0 {
                    continue;
                }
                let score = upgrade_score(dq, self.inst.cost(i, j) - self.inst.cost(i, cur));
                if best.is_none_or(|b| better(score, b.2)) {
                    best = Some((i, j, score));
                }
            }
        }
        best
    }

    fn best_upgrade_swap(&self) -> Option<(usize, usize, (bool, f64))> {
        let mut best: Option<(usize, usize, (bool, f64))> = None;
        let n = self.choice.len();
        for i in 0..n {
            for k in i + 1..n {
                let (ji, jk) = (self.choice[i], self.choice[k]);
                if ji == jk {
                    continue;
                }
                let c = |q, j| self.inst.cost(q, j);
                let a = |q, j| self.inst.capability(q, j);
                let dq = a(i, jk) + a(k, ji) - a(i, ji) - a(k, jk);
                if dq <= 0.0 {
                    continue;
                }
                let score = upgrade_score(dq, c(i, jk) + c(k, ji) - c(i, ji) - c(k, jk));
                if best.is_none_or(|b| better(score, b.2)) {
                    best = Some((i, k, score));
                }
            }
        }
        best
    }
}

/// Turns a relaxed assignment into a feasible one, if this finds one.
///
/// Overflow queries move to free slots at the least increase in
/// `cost - weight * capability`; then quality is raised by the steps with
/// the best gain per unit of cost until the floor holds.
pub(crate) fn repair(
    instance: &RoutingInstance,
    assignment: &Assignment,
    weight: f64,
) -> Option<Assignment> {
    let n = instance.n_queries();
    let m = instance.n_models();
    let cap = instance.capacity();
    let mut state = State {
        inst: instance,
        choice: assignment.choice.clone(),
        loads: instance.loads(assignment),
        quality_sum: instance.avg_quality(assignment) * n as f64,
        floor: (instance.alpha() - QUALITY_TOLERANCE / 2.0) * n as f64,
    };
    let penalised = |i: usize, j: usize| instance.cost(i, j) - weight * instance.capability(i, j);
    while let Some(over) = (0..m).find(|&j| state.loads[j] > cap[j]) {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, &cur) in state.choice.iter().enumerate() {
            if cur != over {
                continue;
            }
            for j in 0..m {
                if state.loads[j] >= cap[j] {
                    continue;
                }
                let d = penalised(i, j) - penalised(i, over);
                if best.is_none_or(|b| d < b.2) {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, _) = best?;
        state.reassign(i, j);
    }
    while !state.keeps_floor(0.0) {
        let mv = state.best_upgrade_move();
        let swap = if n <= SWAP_LIMIT {
            state.best_upgrade_swap()
        } else {
            None
        };
        match (mv, swap) {
            (Some(a), Some(b)) if better(b.2, a.2) => {
                let (ji, jk) = (state.choice[b.0], state.choice[b.1]);
                state.reassign(b.0, jk);
                state.reassign(b.1, ji);
            }
            (Some((i, j, _)), _) => state.reassign(i, j),
            (None, Some((i, k, _))) => {
                let (ji, jk) = (state.choice[i], state.choice[k]);
                state.reassign(i, jk);
                state.reassign(k, ji);
            }
            (None, None) => return None,
        }
    }
    let repaired = Assignment::new(state.choice);
    instance.is_feasible(&repaired).then_some(repaired)
}
