//! Constrained multi-LLM routing.
//!
//! Queries arrive in windows; a retrieval-augmented predictor estimates each
//! model's capability and cost per query, and a Lagrangian dual solver picks
//! the cheapest assignment that meets an average-quality floor without
//! exceeding any model's concurrency limit.

pub mod baselines;
pub mod dataset;
pub mod money;
pub mod optimizer;
pub mod pipeline;
pub mod predictor;
pub mod simulator;
pub mod synthetic;

pub use money::{Money, TokenPrice};
