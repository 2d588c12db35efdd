//! Symbolic two-agent household simulator for capability-aware helping.
//!
//! A scripted main agent with a (possibly limited) capability vector works
//! through a household task while a helper agent observes it partially,
//! infers its current goal and capability class, and decides whether help
//! is actually needed. The crate contains the world model, procedural scene
//! generation, task parsing, planners, the discrete Bayesian filter, the
//! helper policies, reward and metric accounting, and the benchmark harness.
//!
//! Numerical code that carries probabilities or rewards is generic over
//! [`Scalar`]; the aliases at the crate root pin it to `f64`.

pub mod benchmark;
pub mod catalog;
pub mod dataset;
pub mod episode;
pub mod error;
pub mod helpers;
pub mod inference;
pub mod mcts;
pub mod metrics;
pub mod planner;
pub mod reward;
pub mod rng;
pub mod scalar;
pub mod scene;
pub mod task;
pub mod verify;
pub mod world;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Posterior over (goal candidate, capability cell) in double precision.
pub type Belief = inference::BeliefState<f64>;

/// Filter parameters in double precision.
pub type FilterParams = inference::FilterParams<f64>;
/// Reward constants in double precision.
pub type Rewards = reward::RewardConfig<f64>;
/// Per-step helper reward breakdown in double precision.
pub type StepReward = reward::RewardBreakdown<f64>;
/// Aggregated benchmark metrics in double precision.
pub type Report = metrics::MetricsReport<f64>;
