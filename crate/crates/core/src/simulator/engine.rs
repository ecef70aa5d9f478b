use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::traffic::{generate_arrivals, TrafficConfig};
use super::{ServiceModel, SimError};
use crate::baselines::{BaselineError, GreedyPolicy, GreedyRouter};
use crate::dataset::{token_cost, Dataset, Difficulty, Tier};
use crate::money::Money;
use crate::optimizer::{
    fallback_placement, solve, RoutingInstance, SolveStatus, SolverConfig, QUALITY_TOLERANCE,
};
use crate::predictor::PredictionTable;

/// Routing strategy for a whole run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Router {
    Omni { solver: SolverConfig },
    Greedy { policy: GreedyPolicy },
}

impl Router {
    pub fn omni() -> Self {
        Router::Omni {
            solver: SolverConfig::default(),
        }
    }

    pub fn greedy(policy: GreedyPolicy) -> Self {
        Router::Greedy { policy }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Router::Omni { .. } => "omni",
            Router::Greedy { policy } => policy.name(),
        }
    }
}

/// Router plus whatever state it carries between windows.
#[derive(Clone, Debug)]
pub enum ActiveRouter {
    Omni(SolverConfig),
    Greedy(GreedyRouter),
}

impl From<&Router> for ActiveRouter {
    fn from(router: &Router) -> Self {
        match router {
            Router::Omni { solver } => ActiveRouter::Omni(*solver),
            Router::Greedy { policy } => ActiveRouter::Greedy(GreedyRouter::new(*policy)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub traffic: TrafficConfig,
    pub service: ServiceModel,
    pub alpha: f64,
    /// Concurrency limit per model.
    pub capacities: Vec<u32>,
}

impl SimConfig {
    /// Default traffic and service, `alpha = 0.75`, each model's own limit.
    pub fn for_dataset(dataset: &Dataset) -> Self {
        SimConfig {
            traffic: TrafficConfig::default(),
            service: ServiceModel::default(),
            alpha: 0.75,
            capacities: dataset.models.iter().map(|m| m.concurrency_limit).collect(),
        }
    }

    pub fn with_uniform_capacity(mut self, limit: u32) -> Self {
        self.capacities.iter_mut().for_each(|c| *c = limit);
        self
    }

    pub fn validate(&self, n_models: usize) -> Result<(), SimError> {
        self.traffic.validate()?;
        self.service.validate(n_models)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SimError::Config(format!(
                "alpha {} is outside [0, 1]",
                self.alpha
            )));
        }
        if self.capacities.len() != n_models {
            return Err(SimError::Config(format!(
                "{} capacities for {n_models} models",
                self.capacities.len()
            )));
        }
        if self.capacities.iter().all(|&c| c == 0) {
            return Err(SimError::Config(
                "at least one model needs positive capacity".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    NotArrived,
    Queued,
    InFlight,
    Completed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InFlight {
    pub query: usize,
    pub done_tick: u64,
}

/// Live serving state. Every query is in exactly one phase.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub clock: u64,
    pub queue: VecDeque<usize>,
    pub in_flight: Vec<Vec<InFlight>>,
    pub phase: Vec<Phase>,
    pub arrived: usize,
    pub completed: usize,
}

impl SystemState {
    pub fn new(n_queries: usize, n_models: usize) -> Self {
        SystemState {
            clock: 0,
            queue: VecDeque::new(),
            in_flight: vec![Vec::new(); n_models],
            phase: vec![Phase::NotArrived; n_queries],
            arrived: 0,
            completed: 0,
        }
    }

    pub fn loads(&self) -> Vec<u32> {
        self.in_flight.iter().map(|f| f.len() as u32).collect()
    }

    pub fn n_in_flight(&self) -> usize {
        self.in_flight.iter().map(Vec::len).sum()
    }

    /// `arrived = completed + in flight + queued`.
    pub fn conserves(&self) -> bool {
        self.arrived == self.completed + self.n_in_flight() + self.queue.len()
    }

    fn enqueue(&mut self, query: usize) {
        self.phase[query] = Phase::Queued;
        self.queue.push_back(query);
        self.arrived += 1;
    }

    fn complete_due(&mut self) {
        let now = self.clock;
        for flights in &mut self.in_flight {
            flights.retain(|f| {
                if f.done_tick <= now {
                    self.phase[f.query] = Phase::Completed;
                    self.completed += 1;
                    false
                } else {
                    true
                }
            });
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub query: usize,
    pub model: usize,
    pub done_tick: u64,
}

/// One routing window, as written to the run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowLog {
    pub tick: u64,
    pub queue_depth: usize,
    pub routed: usize,
    pub requeued: usize,
    /// In-flight count per model after placement.
    pub loads: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<SolveStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_quality: Option<f64>,
    #[serde(skip)]
    pub placements: Vec<Placement>,
}

/// Immutable inputs shared by every window of a run.
pub struct WindowContext<'a> {
    pub dataset: &'a Dataset,
    pub predictions: &'a PredictionTable,
    pub config: &'a SimConfig,
}

fn residual_capacity(state: &SystemState, capacities: &[u32]) -> Vec<u32> {
    capacities
        .iter()
        .zip(&state.in_flight)
        .map(|(&c, f)| c.saturating_sub(f.len() as u32))
        .collect()
}

/// Routes every queued query that fits; the rest return to the queue in
/// their original order. The constrained router solves over the oldest
/// queries, as many as there are free slots.
pub fn run_window(
    state: &mut SystemState,
    router: &mut ActiveRouter,
    ctx: &WindowContext,
) -> WindowLog {
    let pending: Vec<usize> = state.queue.drain(..).collect();
    let mut residual = residual_capacity(state, &ctx.config.capacities);
    let m = ctx.dataset.n_models();
    let mut status = None;
    let mut predicted_quality = None;
    let choices: Vec<Option<usize>> = if pending.is_empty() {
        Vec::new()
    } else {
        match router {
            ActiveRouter::Omni(solver) => {
                // admit a FIFO prefix no larger than the free slots
                let slots: usize = residual.iter().map(|&r| r as usize).sum();
                let admitted = &pending[..pending.len().min(slots)];
                let mut cost = Vec::with_capacity(admitted.len() * m);
                let mut capability = Vec::with_capacity(admitted.len() * m);
                for &q in admitted {
                    for p in ctx.predictions.row(q) {
                        cost.push(p.cost);
                        capability.push(p.a);
                    }
                }
                let instance = RoutingInstance::new(
                    admitted.len(),
                    m,
                    cost,
                    capability,
                    ctx.config.alpha,
                    residual.clone(),
                )
                .expect("predictions are finite and within [0, 1]");
                let (assignment, report) = solve(&instance, solver);
                status = Some(report.status);
                if report.feasible {
                    predicted_quality = Some(report.avg_quality);
                    assignment.choice.into_iter().map(Some).collect()
                } else {
                    fallback_placement(&instance)
                }
            }
            ActiveRouter::Greedy(greedy) => {
                let mut out = vec![None; pending.len()];
                for (slot, &q) in out.iter_mut().zip(&pending) {
                    match greedy.route(ctx.predictions.row(q), &residual) {
                        Ok(j) => {
                            residual[j] -= 1;
                            *slot = Some(j);
                        }
                        Err(BaselineError::CapacityExhausted) => break,
                        Err(e) => unreachable!("row width matches the model count: {e}"),
                    }
                }
                out
            }
        }
    };

    let mut placements = Vec::new();
    let mut requeued = 0;
    for (k, &q) in pending.iter().enumerate() {
        match choices.get(k).copied().flatten() {
            Some(j) => {
                let model = &ctx.dataset.models[j];
                let out = ctx.dataset.queries[q].out_tokens_for(&model.id);
                let done_tick = state.clock
                    + ctx
                        .config
                        .service
                        .service_ticks(j, model, out, ctx.config.traffic.tick_ms);
                state.in_flight[j].push(InFlight {
                    query: q,
                    done_tick,
                });
                state.phase[q] = Phase::InFlight;
                placements.push(Placement {
                    query: q,
                    model: j,
                    done_tick,
                });
            }
            None => {
                state.queue.push_back(q);
                requeued += 1;
            }
        }
    }
    if predicted_quality.is_none() && !placements.is_empty() {
        let sum: f64 = placements
            .iter()
            .map(|p| ctx.predictions.get(p.query, p.model).a)
            .sum();
        predicted_quality = Some(sum / placements.len() as f64);
    }
    WindowLog {
        tick: state.clock,
        queue_depth: pending.len(),
        routed: placements.len(),
        requeued,
        loads: state.loads(),
        status,
        predicted_quality,
        placements,
    }
}

/// Routed-query counts by difficulty (rows) and tier (columns).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingCounts(pub [[u64; 2]; 3]);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub router: String,
    pub alpha: f64,
    pub capacities: Vec<u32>,
    pub seed: u64,
    /// Fraction of routed queries the chosen model answers correctly.
    pub accuracy: f64,
    /// Observed token cost, in pico-dollars.
    pub total_cost: Money,
    pub total_cost_dollars: f64,
    pub arrived: usize,
    pub routed: usize,
    pub correct: usize,
    pub completed: usize,
    pub queued_at_end: usize,
    pub in_flight_at_end: usize,
    pub ticks: u64,
    pub windows: usize,
    /// Windows whose routed queries answer correctly less often than alpha.
    pub quality_violation_windows: usize,
    /// Windows where the solver reported `LIKELY_INFEASIBLE`.
    pub infeasible_windows: usize,
    pub requeue_events: usize,
    pub max_queue_depth: usize,
    pub capacity_violations: usize,
    pub conservation_violations: usize,
    /// Mean predicted capability of the routed pairs.
    pub predicted_quality: f64,
    pub per_model_routed: Vec<u64>,
    pub routing_counts: RoutingCounts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRun {
    pub metrics: SimMetrics,
    pub windows: Vec<WindowLog>,
}

/// Ticks until every arrived query completes or the horizon passes.
///
/// Each tick frees finished slots, admits arrivals, routes on window
/// boundaries, then checks capacity and conservation.
pub fn run_simulation(
    dataset: &Dataset,
    predictions: &PredictionTable,
    router: &Router,
    config: &SimConfig,
) -> Result<SimRun, SimError> {
    let n = dataset.n_queries();
    let m = dataset.n_models();
    config.validate(m)?;
    if predictions.n_queries() != n || predictions.n_models() != m {
        return Err(SimError::Shape(format!(
            "predictions are {} x {}, dataset is {n} x {m}",
            predictions.n_queries(),
            predictions.n_models()
        )));
    }
    let arrivals = generate_arrivals(&config.traffic, n)?;
    let interval = config.traffic.interval_ticks();
    let horizon = config.traffic.horizon_ticks();
    let ctx = WindowContext {
        dataset,
        predictions,
        config,
    };
    let mut active = ActiveRouter::from(router);
    let mut state = SystemState::new(n, m);
    let mut windows = Vec::new();
    let mut next = 0usize;
    let mut capacity_violations = 0usize;
    let mut conservation_violations = 0usize;
    let mut ticks = 0u64;

    loop {
        if horizon.is_some_and(|h| state.clock >= h) {
            break;
        }
        state.complete_due();
        while next < arrivals.len() && arrivals[next].tick == state.clock {
            state.enqueue(arrivals[next].query);
            next += 1;
        }
        if state.clock.is_multiple_of(interval) && !state.queue.is_empty() {
            windows.push(run_window(&mut state, &mut active, &ctx));
        }
        for (flights, &cap) in state.in_flight.iter().zip(&config.capacities) {
            if flights.len() > cap as usize {
                capacity_violations += 1;
            }
        }
        if !state.conserves() {
            conservation_violations += 1;
        }
        debug_assert_eq!(capacity_violations + conservation_violations, 0);
        ticks = state.clock + 1;
        if next == arrivals.len() && state.queue.is_empty() && state.n_in_flight() == 0 {
            break;
        }
        state.clock += 1;
    }

    let mut metrics = SimMetrics {
        router: router.name().to_string(),
        alpha: config.alpha,
        capacities: config.capacities.clone(),
        seed: config.traffic.seed,
        accuracy: 0.0,
        total_cost: Money::ZERO,
        total_cost_dollars: 0.0,
        arrived: state.arrived,
        routed: 0,
        correct: 0,
        completed: state.completed,
        queued_at_end: state.queue.len(),
        in_flight_at_end: state.n_in_flight(),
        ticks,
        windows: windows.len(),
        quality_violation_windows: 0,
        infeasible_windows: 0,
        requeue_events: 0,
        max_queue_depth: 0,
        capacity_violations,
        conservation_violations,
        predicted_quality: 0.0,
        per_model_routed: vec![0; m],
        routing_counts: RoutingCounts::default(),
    };
    let mut predicted_sum = 0.0;
    for w in &windows {
        let mut window_correct = 0usize;
        for p in &w.placements {
            let q = &dataset.queries[p.query];
            let model = &dataset.models[p.model];
            let ok = q.is_correct(&model.id);
            window_correct += usize::from(ok);
            metrics.total_cost += token_cost(model, q.in_tokens, q.out_tokens_for(&model.id));
            metrics.per_model_routed[p.model] += 1;
            metrics.routing_counts.0[dataset.difficulty(q).index()][model.tier.index()] += 1;
            predicted_sum += predictions.get(p.query, p.model).a;
        }
        metrics.routed += w.routed;
        metrics.correct += window_correct;
        if w.routed > 0
            && (window_correct as f64 / w.routed as f64) < config.alpha - QUALITY_TOLERANCE
        {
            metrics.quality_violation_windows += 1;
        }
        if w.status == Some(SolveStatus::LikelyInfeasible) {
            metrics.infeasible_windows += 1;
        }
        metrics.requeue_events += w.requeued;
        metrics.max_queue_depth = metrics.max_queue_depth.max(w.queue_depth);
    }
    if metrics.routed > 0 {
        metrics.accuracy = metrics.correct as f64 / metrics.routed as f64;
        metrics.predicted_quality = predicted_sum / metrics.routed as f64;
    }
    metrics.total_cost_dollars = metrics.total_cost.dollars();
    Ok(SimRun { metrics, windows })
}

/// One cell of the difficulty-by-tier routing table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionCell {
    pub difficulty: Difficulty,
    pub tier: Tier,
    pub count: u64,
    pub fraction: f64,
}

/// Fractions over all routed queries, EASY..HARD by WEAK, STRONG.
pub fn routing_distribution(metrics: &SimMetrics) -> Vec<DistributionCell> {
    let total: u64 = metrics.routing_counts.0.iter().flatten().sum();
    let mut cells = Vec::with_capacity(6);
    for d in Difficulty::ALL {
        for t in Tier::ALL {
            let count = metrics.routing_counts.0[d.index()][t.index()];
            cells.push(DistributionCell {
                difficulty: d,
                tier: t,
                count,
                fraction: if total == 0 {
                    0.0
                } else {
                    count as f64 / total as f64
                },
            });
        }
    }
    cells
}
