//! Continual-learning strategies and replay-memory machinery.

mod adaptercl;
mod agem;
mod config;
mod memory;
mod perplexity;
mod trainer;

pub use adaptercl::adaptercl_select;
pub use agem::agem_project;
pub use config::{StrategyConfig, StrategyKind};
pub use memory::{ReplayEntry, ReplayMemory};
pub use perplexity::{action_perplexity, ap_from_log_probs};
pub use trainer::{train_domain, TrainOptions, TrainerState};
