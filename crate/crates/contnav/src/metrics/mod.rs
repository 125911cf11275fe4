//! Navigation metrics, the result matrix and forgetting summaries.

mod episode;
mod matrix;

pub use episode::{episode_metrics, evaluate_domain, DomainMeans, EpisodeResult, Metric,
                  SUCCESS_THRESHOLD_M};
pub use matrix::{MatrixCell, ResultMatrix};
