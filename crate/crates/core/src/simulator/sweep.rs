use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::engine::{run_simulation, Router, SimConfig, SimMetrics};
use super::SimError;
use crate::dataset::Dataset;
use crate::money::Money;
use crate::predictor::PredictionTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Alpha,
    Concurrency,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Concurrency => "concurrency",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: SweepParam,
    pub value: f64,
    pub router: String,
    pub accuracy: f64,
    pub total_cost: Money,
    pub total_cost_dollars: f64,
    pub quality_violation_windows: usize,
    pub capacity_violations: usize,
    pub completed: usize,
}

impl SweepPoint {
    fn from_metrics(param: SweepParam, value: f64, m: &SimMetrics) -> Self {
        SweepPoint {
            param,
            value,
            router: m.router.clone(),
            accuracy: m.accuracy,
            total_cost: m.total_cost,
            total_cost_dollars: m.total_cost_dollars,
            quality_violation_windows: m.quality_violation_windows,
            capacity_violations: m.capacity_violations,
            completed: m.completed,
        }
    }
}

/// Runs `configs` on up to `jobs` threads; results keep input order.
fn run_all(
    dataset: &Dataset,
    predictions: &PredictionTable,
    router: &Router,
    configs: &[SimConfig],
    jobs: usize,
) -> Result<Vec<SimMetrics>, SimError> {
    let jobs = jobs.clamp(1, configs.len().max(1));
    let chunk = configs.len().div_ceil(jobs).max(1);
    let results: Vec<Result<Vec<SimMetrics>, SimError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|c| run_simulation(dataset, predictions, router, c).map(|r| r.metrics))
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(configs.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

fn check_sorted<T: PartialOrd + Copy + std::fmt::Debug>(values: &[T]) -> Result<(), SimError> {
    if values.is_empty() {
        return Err(SimError::Config("sweep needs at least one value".into()));
    }
    if values.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(SimError::Config(format!(
            "sweep values {values:?} are not ascending"
        )));
    }
    Ok(())
}

/// One full simulation per alpha, same seeds throughout.
pub fn sweep_alpha(
    dataset: &Dataset,
    predictions: &PredictionTable,
    router: &Router,
    base: &SimConfig,
    values: &[f64],
    jobs: usize,
) -> Result<Vec<SweepPoint>, SimError> {
    check_sorted(values)?;
    let configs: Vec<SimConfig> = values
        .iter()
        .map(|&alpha| SimConfig {
            alpha,
            ..base.clone()
        })
        .collect();
    let metrics = run_all(dataset, predictions, router, &configs, jobs)?;
    Ok(values
        .iter()
        .zip(&metrics)
        .map(|(&v, m)| SweepPoint::from_metrics(SweepParam::Alpha, v, m))
        .collect())
}

/// One full simulation per uniform concurrency limit.
pub fn sweep_concurrency(
    dataset: &Dataset,
    predictions: &PredictionTable,
    router: &Router,
    base: &SimConfig,
    values: &[u32],
    jobs: usize,
) -> Result<Vec<SweepPoint>, SimError> {
    check_sorted(values)?;
    let configs: Vec<SimConfig> = values
        .iter()
        .map(|&l| base.clone().with_uniform_capacity(l))
        .collect();
    let metrics = run_all(dataset, predictions, router, &configs, jobs)?;
    Ok(values
        .iter()
        .zip(&metrics)
        .map(|(&v, m)| SweepPoint::from_metrics(SweepParam::Concurrency, v as f64, m))
        .collect())
}

/// Tab-separated curve, one row per point, with a header.
pub fn format_curve(points: &[SweepPoint]) -> String {
    let mut out = String::from("router\tparam\tvalue\taccuracy\tcost_usd\tquality_violation_windows\tcapacity_violations\n");
    for p in points {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.9}\t{}\t{}",
            p.router,
            p.param.name(),
            p.value,
            p.accuracy,
            p.total_cost_dollars,
            p.quality_violation_windows,
            p.capacity_violations
        );
    }
    out
}
