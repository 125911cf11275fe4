//! Sequential curriculum execution.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::curriculum::Curriculum;
use crate::harness::io::{
    checkpoint_path, matrix_path, read_checkpoint, write_checkpoint, write_matrix, MatrixFile,
    RunCheckpoint, CHECKPOINT_SCHEMA_VERSION,
};
use crate::metrics::{evaluate_domain, ResultMatrix};
use crate::policy::PolicyParams;
use crate::scalar::Scalar;
use crate::sim::{generate_domain, Benchmark};
use crate::strategies::{train_domain, StrategyConfig, StrategyKind, TrainOptions, TrainerState};

/// Generate the whole benchmark for a config (deterministic in the
/// config's generation section and benchmark seed).
pub fn generate_benchmark<S: Scalar>(cfg: &ExperimentConfig) -> Result<Benchmark<S>> {
    let flavor = cfg.flavor()?;
    let params = cfg.generation.gen_params();
    let domains = (0..cfg.generation.num_domains as u32)
        .map(|d| generate_domain(d, cfg.experiment.bench_seed, flavor, &params))
        .collect::<Result<Vec<_>>>()?;
    Ok(Benchmark { flavor, domains })
}

/// Human-readable row label for a strategy variant.
pub fn strategy_label(strategy: &StrategyConfig) -> String {
    match strategy.kind {
        StrategyKind::Esr => match (strategy.esr_use_lm, strategy.esr_use_lesr) {
            (true, true) => "ESR".into(),
            (false, true) => "ESR-noLM".into(),
            (true, false) => "ESR-noLESR".into(),
            (false, false) => "ESR-noLM-noLESR".into(),
        },
        StrategyKind::PerpR if strategy.perpr_reverse => "PerpR-Rev.".into(),
        kind => kind.label().into(),
    }
}

/// File-name stem identifying one run.
pub fn run_stem(strategy: &StrategyConfig, curriculum_seed: u64) -> String {
    let variant = match strategy.kind {
        StrategyKind::Esr => match (strategy.esr_use_lm, strategy.esr_use_lesr) {
            (true, true) => "esr".into(),
            (false, true) => "esr-nolm".into(),
            (true, false) => "esr-nolesr".into(),
            (false, false) => "esr-nolm-nolesr".into(),
        },
        StrategyKind::PerpR if strategy.perpr_reverse => "perpr-rev".to_string(),
        kind => kind.key().to_string(),
    };
    format!("{variant}_cap{}_seed{curriculum_seed}", strategy.memory_capacity)
}

/// Run one `(strategy, curriculum)` pair to completion and return the
/// result matrix.
///
/// With an output directory the run checkpoints after every domain,
/// resumes from an existing checkpoint, and writes the final matrix
/// table. `stop_after` ends the run early after that many domains
/// (checkpoint intact), which is how kill-and-resume is exercised.
pub fn run_curriculum<S: Scalar>(
    cfg: &ExperimentConfig,
    bench: &Benchmark<S>,
    strategy: &StrategyConfig,
    curriculum: &Curriculum,
    out_dir: Option<&Path>,
    stop_after: Option<usize>,
) -> Result<ResultMatrix> {
    strategy.validate(cfg.generation.num_domains)?;
    let hash = cfg.benchmark_hash();
    let label = strategy_label(strategy);
    let stem = run_stem(strategy, curriculum.seed);
    let total = curriculum.domain_order.len();

    if strategy.kind == StrategyKind::Joint {
        return run_joint(cfg, bench, strategy, curriculum, out_dir, &hash, &label, &stem);
    }

    // Fresh state, or resume from the checkpoint written after the last
    // completed domain.
    let mut state = TrainerState::new(
        PolicyParams::<S>::init(cfg.policy_shape(), curriculum.seed),
        strategy.memory_capacity,
        total,
    );
    let mut matrix = ResultMatrix::new(
        strategy.kind.key(),
        curriculum.seed,
        curriculum.flavor.short(),
        curriculum.domain_order.clone(),
    );
    let mut start_pos = 0usize;
    if let Some(dir) = out_dir {
        let ckpt_path = checkpoint_path(dir, &stem);
        if ckpt_path.exists() {
            let ckpt = read_checkpoint::<S>(&ckpt_path)?;
            if ckpt.benchmark_hash != hash {
                return Err(Error::Config(format!(
                    "checkpoint {} belongs to config {}, this run is {}",
                    ckpt_path.display(),
                    ckpt.benchmark_hash,
                    hash
                )));
            }
            state.policy = PolicyParams::from_flat(cfg.policy_shape(), ckpt.theta)?;
            state.adam = ckpt.adam;
            state.anchor = ckpt.anchor;
            state.adapters = ckpt.adapters;
            state.memory = ckpt.memory;
            matrix = ckpt.matrix;
            start_pos = ckpt.domains_done;
        }
    }

    for pos in start_pos..total {
        let domain_id = curriculum.domain_order[pos];
        let refs: Vec<(u32, u32)> = bench
            .domain(domain_id)?
            .train_episodes
            .iter()
            .map(|e| (domain_id, e.episode_id))
            .collect();
        let opts = TrainOptions {
            seed: curriculum.seed,
            epochs: cfg.training.epochs_per_domain,
            batch_size: cfg.training.batch_size,
            hyper: cfg.adam_hyper(),
            curriculum_pos: pos as u32,
        };
        train_domain(strategy, &mut state, bench, domain_id, &refs, &opts)?;

        // Evaluate every domain seen so far with the fresh snapshot.
        let adapters = (strategy.kind == StrategyKind::AdapterCl).then_some(&state.adapters[..]);
        for i in 0..=pos {
            let eval_domain = bench.domain(curriculum.domain_order[i])?;
            let means = evaluate_domain(
                &state.policy,
                adapters,
                eval_domain,
                cfg.training.eval_max_steps,
            )?;
            matrix.set(pos + 1, i + 1, means);
        }

        if let Some(dir) = out_dir {
            let ckpt = RunCheckpoint {
                schema_version: CHECKPOINT_SCHEMA_VERSION,
                benchmark_hash: hash.clone(),
                strategy_key: strategy.kind.key().into(),
                label: label.clone(),
                capacity: strategy.memory_capacity,
                curriculum_seed: curriculum.seed,
                rng_seed: curriculum.seed,
                domains_done: pos + 1,
                theta: state.policy.flatten(),
                adam: state.adam.clone(),
                anchor: state.anchor.clone(),
                adapters: state.adapters.clone(),
                memory: state.memory.clone(),
                matrix: matrix.clone(),
            };
            write_checkpoint(&checkpoint_path(dir, &stem), &ckpt)?;
        }
        if stop_after.is_some_and(|k| pos + 1 >= k) && pos + 1 < total {
            return Ok(matrix);
        }
    }

    if let Some(dir) = out_dir {
        let file = MatrixFile {
            benchmark_hash: hash,
            label,
            capacity: strategy.memory_capacity,
            matrix: matrix.clone(),
        };
        write_matrix(&matrix_path(dir, &stem), &file)?;
    }
    Ok(matrix)
}

/// Joint upper bound: one training pass over the pooled episodes of all
/// domains (each union epoch visits every episode once, so the gradient
/// budget matches a sequential run), then only the final matrix row is
/// evaluated — earlier rows are meaningless for a non-sequential run.
#[allow(clippy::too_many_arguments)]
fn run_joint<S: Scalar>(
    cfg: &ExperimentConfig,
    bench: &Benchmark<S>,
    strategy: &StrategyConfig,
    curriculum: &Curriculum,
    out_dir: Option<&Path>,
    hash: &str,
    label: &str,
    stem: &str,
) -> Result<ResultMatrix> {
    let total = curriculum.domain_order.len();
    let mut state = TrainerState::new(
        PolicyParams::<S>::init(cfg.policy_shape(), curriculum.seed),
        strategy.memory_capacity,
        total,
    );
    let mut refs: Vec<(u32, u32)> = Vec::new();
    for &domain_id in &curriculum.domain_order {
        for e in &bench.domain(domain_id)?.train_episodes {
            refs.push((domain_id, e.episode_id));
        }
    }
    let opts = TrainOptions {
        seed: curriculum.seed,
        epochs: cfg.training.epochs_per_domain,
        batch_size: cfg.training.batch_size,
        hyper: cfg.adam_hyper(),
        curriculum_pos: 0,
    };
    train_domain(strategy, &mut state, bench, curriculum.domain_order[0], &refs, &opts)?;

    let mut matrix = ResultMatrix::new(
        strategy.kind.key(),
        curriculum.seed,
        curriculum.flavor.short(),
        curriculum.domain_order.clone(),
    );
    for i in 0..total {
        let eval_domain = bench.domain(curriculum.domain_order[i])?;
        let means = evaluate_domain(&state.policy, None, eval_domain, cfg.training.eval_max_steps)?;
        matrix.set(total, i + 1, means);
    }
    if let Some(dir) = out_dir {
        let file = MatrixFile {
            benchmark_hash: hash.to_string(),
            label: label.to_string(),
            capacity: strategy.memory_capacity,
            matrix: matrix.clone(),
        };
        write_matrix(&matrix_path(dir, stem), &file)?;
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Metric;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.generation.num_domains = 2;
        cfg.generation.num_scenes = 2;
        cfg.generation.nodes_per_scene = 12;
        cfg.generation.train_episodes = 8;
        cfg.generation.val_episodes = 3;
        cfg.training.epochs_per_domain = 1;
        cfg.experiment.memory_capacity = 2;
        cfg.experiment.curriculum_seeds = vec![11];
        cfg
    }

    #[test]
    fn single_domain_curriculum_average_is_the_cell() {
        let mut cfg = tiny_config();
        cfg.generation.num_domains = 1;
        cfg.experiment.memory_capacity = 1;
        let bench = generate_benchmark::<f64>(&cfg).unwrap();
        let curriculum = Curriculum::new(11, bench.flavor, 1);
        let strategy = StrategyConfig {
            memory_capacity: 1,
            ..StrategyConfig::for_kind(StrategyKind::Vanilla)
        };
        let matrix =
            run_curriculum(&cfg, &bench, &strategy, &curriculum, None, None).unwrap();
        let avg = matrix.average_metric(Metric::Sr).unwrap();
        assert_eq!(avg, matrix.get(1, 1).unwrap().sr);
    }

    #[test]
    fn rerun_is_identical() {
        let cfg = tiny_config();
        let bench = generate_benchmark::<f64>(&cfg).unwrap();
        let curriculum = Curriculum::new(11, bench.flavor, 2);
        let strategy = StrategyConfig {
            memory_capacity: 2,
            ..StrategyConfig::for_kind(StrategyKind::Esr)
        };
        let a = run_curriculum(&cfg, &bench, &strategy, &curriculum, None, None).unwrap();
        let b = run_curriculum(&cfg, &bench, &strategy, &curriculum, None, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn joint_fills_only_the_final_row() {
        let cfg = tiny_config();
        let bench = generate_benchmark::<f64>(&cfg).unwrap();
        let curriculum = Curriculum::new(11, bench.flavor, 2);
        let strategy = StrategyConfig::for_kind(StrategyKind::Joint);
        let matrix =
            run_curriculum(&cfg, &bench, &strategy, &curriculum, None, None).unwrap();
        assert!(matrix.get(2, 1).is_some());
        assert!(matrix.get(2, 2).is_some());
        assert!(matrix.get(1, 1).is_none());
        assert!(matrix.average_metric(Metric::Sr).is_ok());
        assert!(matrix.stability_plasticity(2, Metric::Sr).is_err());
    }
}
