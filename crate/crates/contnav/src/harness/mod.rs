//! Experiment orchestration: configs, curricula, runs, files, reports.

mod config;
mod curriculum;
mod io;
mod report;
mod runner;

pub use config::{
    ExperimentConfig, ExperimentSection, GenerationSection, PolicySection, StrategySection,
    TrainingSection, CONFIG_SCHEMA_VERSION,
};
pub use curriculum::Curriculum;
pub use io::{
    bundle_path, checkpoint_path, matrix_path, read_benchmark, read_checkpoint,
    read_domain_bundle, read_matrix, read_matrix_dir, write_checkpoint, write_domain_bundle,
    write_matrix, DomainBundle, MatrixFile, RunCheckpoint, BUNDLE_SCHEMA_VERSION,
    CHECKPOINT_SCHEMA_VERSION, MATRIX_SCHEMA_VERSION,
};
pub use report::{build_report, write_report, Report};
pub use runner::{generate_benchmark, run_curriculum, run_stem, strategy_label};
