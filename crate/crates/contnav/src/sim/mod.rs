//! Procedural navigation benchmark: scenes, episodes, scene domains and
//! the graph services (candidates, shortest paths, distances) every other
//! module builds on.

mod benchmark;
mod episode;
mod generate;
mod instruction;
mod scene;
pub mod vocab;

pub use benchmark::Benchmark;
pub use episode::{Episode, Flavor, SceneDomain};
pub use generate::{generate_domain, GenParams};
pub use instruction::make_instruction;
pub use scene::{Candidate, Scene};
