//! Discrete-time continuous-batching serving loop.
//!
//! Queries arrive every tick, are routed in batches at fixed intervals onto
//! models with limited concurrency, and hold their slot for a service time
//! derived from their observed output length. Routing sees predictions;
//! metrics use ground truth.

mod engine;
mod service;
mod sweep;
mod traffic;

use thiserror::Error;

pub use engine::{
    routing_distribution, run_simulation, run_window, ActiveRouter, DistributionCell, InFlight,
    Phase, Placement, Router, RoutingCounts, SimConfig, SimMetrics, SimRun, SystemState,
    WindowContext, WindowLog,
};
pub use service::ServiceModel;
pub use sweep::{format_curve, sweep_alpha, sweep_concurrency, SweepParam, SweepPoint};
pub use traffic::{generate_arrivals, Arrival, TrafficConfig};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}
