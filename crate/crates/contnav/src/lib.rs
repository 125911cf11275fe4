//! Continual-learning testbed for instruction-following graph navigation.
//!
//! The crate generates procedural navigation benchmarks split into scene
//! domains, trains a small differentiable policy on them sequentially,
//! applies one of eight continual-learning strategies, and measures how
//! much earlier domains are forgotten.
//!
//! All numeric code is generic over the scalar type via [`Scalar`]
//! (`f32` or `f64`); the concrete aliases below pin the common choices.

mod cli;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod policy;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod strategies;

pub use cli::run_cli;
pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scene graph in single precision.
pub type Scene32 = sim::Scene<f32>;
/// Scene graph in double precision (default for experiments).
pub type Scene64 = sim::Scene<f64>;
/// Scene domain in single precision.
pub type SceneDomain32 = sim::SceneDomain<f32>;
/// Scene domain in double precision (default for experiments).
pub type SceneDomain64 = sim::SceneDomain<f64>;
