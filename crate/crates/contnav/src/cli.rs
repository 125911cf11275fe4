//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{
    build_report, generate_benchmark, read_benchmark, read_checkpoint, read_matrix_dir,
    run_curriculum, run_stem, strategy_label, write_domain_bundle, write_report, Curriculum,
    ExperimentConfig,
};
use crate::metrics::{evaluate_domain, Metric};
use crate::policy::PolicyParams;
use crate::sim::{Benchmark, Flavor};
use crate::strategies::{StrategyConfig, StrategyKind};

#[derive(Parser)]
#[command(
    name = "contnav",
    version,
    about = "Continual-learning testbed for instruction-following graph navigation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config file (TOML). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,

    /// Seed override: benchmark seed for `gen`, curriculum seed(s)
    /// otherwise.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the benchmark and write one bundle file per domain.
    Gen {
        #[command(flatten)]
        common: CommonArgs,
        /// Benchmark flavor: I (full route instruction) or D (dialogue
        /// hint). Overrides the config file.
        #[arg(long)]
        flavor: Option<String>,
    },
    /// Train one strategy over one curriculum; checkpoints and the
    /// result matrix go to the output directory.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        strategy: String,
        /// Replay-memory capacity override.
        #[arg(long)]
        capacity: Option<usize>,
        /// Load domain bundles from this directory instead of
        /// regenerating them.
        #[arg(long)]
        bundles: Option<PathBuf>,
        /// Stop (with checkpoint) after this many domains.
        #[arg(long)]
        stop_after: Option<usize>,
        /// Reverse the perplexity memory update.
        #[arg(long)]
        perpr_reverse: bool,
        /// Drop the memory imitation term from the replay loss.
        #[arg(long)]
        esr_no_lm: bool,
        /// Drop the stored-logit term from the replay loss.
        #[arg(long)]
        esr_no_lesr: bool,
    },
    /// Re-evaluate a checkpoint on every domain it has learned.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint file written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run the memory-size sweep (rehearsal strategies x capacities x
    /// curriculum seeds).
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Capacities to sweep; defaults to the config's sweep list.
        #[arg(long, value_delimiter = ',')]
        capacities: Vec<usize>,
        /// Strategies to sweep; defaults to perpr and esr.
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<String>,
    },
    /// Run an ablated strategy variant across all curriculum seeds.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        perpr_reverse: bool,
        #[arg(long)]
        esr_no_lm: bool,
        #[arg(long)]
        esr_no_lesr: bool,
    },
    /// Aggregate matrix files into the report tables.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory holding matrix files; defaults to the output
        /// directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn load_config(common: &CommonArgs, flavor: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => match flavor {
            Some(f) => ExperimentConfig::default_for(Flavor::parse(f)?),
            None => ExperimentConfig::default(),
        },
    };
    if let Some(f) = flavor {
        cfg.flavor = Flavor::parse(f)?.short().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn strategy_config(
    cfg: &ExperimentConfig,
    kind: StrategyKind,
    capacity: Option<usize>,
    perpr_reverse: bool,
    esr_no_lm: bool,
    esr_no_lesr: bool,
) -> StrategyConfig {
    StrategyConfig {
        kind,
        lambda_l2: cfg.strategies.lambda_l2,
        lambda1: cfg.strategies.lambda1,
        lambda2: cfg.strategies.lambda2,
        memory_capacity: capacity.unwrap_or(cfg.experiment.memory_capacity),
        esr_use_lm: !esr_no_lm,
        esr_use_lesr: !esr_no_lesr,
        perpr_reverse,
        adapter_rank: cfg.strategies.adapter_rank,
    }
}

fn benchmark_for(
    cfg: &ExperimentConfig,
    bundles: Option<&Path>,
) -> Result<Benchmark<f64>> {
    match bundles {
        Some(dir) => read_benchmark(dir, &cfg.benchmark_hash(), cfg.generation.num_domains),
        None => generate_benchmark(cfg),
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    bench: &Benchmark<f64>,
    strategy: &StrategyConfig,
    seed: u64,
    out: &Path,
    stop_after: Option<usize>,
) -> Result<()> {
    let curriculum = Curriculum::new(seed, bench.flavor, cfg.generation.num_domains);
    eprintln!(
        "run {} seed {} (capacity {})",
        strategy_label(strategy),
        seed,
        strategy.memory_capacity
    );
    let matrix = run_curriculum(cfg, bench, strategy, &curriculum, Some(out), stop_after)?;
    if stop_after.is_none() {
        let avg = matrix.average_metric(Metric::Sr)?;
        eprintln!(
            "  done: AvgSR {:.1} (matrix_{}.tsv)",
            avg,
            run_stem(strategy, seed)
        );
    } else {
        eprintln!("  stopped after {} domains", stop_after.unwrap_or(0));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common, flavor } => {
            let mut cfg = load_config(&common, flavor.as_deref())?;
            if let Some(seed) = common.seed {
                cfg.experiment.bench_seed = seed;
            }
            let bench = generate_benchmark::<f64>(&cfg)?;
            let hash = cfg.benchmark_hash();
            for domain in &bench.domains {
                let path = write_domain_bundle(&common.out, &hash, bench.flavor, domain)?;
                eprintln!("wrote {}", path.display());
            }
            let cfg_path = common.out.join("config.toml");
            std::fs::write(&cfg_path, cfg.to_toml())
                .map_err(|e| Error::io(cfg_path.display().to_string(), e))?;
            eprintln!(
                "generated {} domains (flavor {}, hash {hash}); config at {}",
                bench.domains.len(),
                cfg.flavor,
                cfg_path.display()
            );
            Ok(())
        }
        Command::Train {
            common,
            strategy,
            capacity,
            bundles,
            stop_after,
            perpr_reverse,
            esr_no_lm,
            esr_no_lesr,
        } => {
            let cfg = load_config(&common, None)?;
            let kind = StrategyKind::parse(&strategy)?;
            let strat = strategy_config(&cfg, kind, capacity, perpr_reverse, esr_no_lm, esr_no_lesr);
            let bench = benchmark_for(&cfg, bundles.as_deref())?;
            let seed = common
                .seed
                .unwrap_or_else(|| cfg.experiment.curriculum_seeds[0]);
            run_one(&cfg, &bench, &strat, seed, &common.out, stop_after)
        }
        Command::Eval { common, checkpoint } => {
            let cfg = load_config(&common, None)?;
            let ckpt = read_checkpoint::<f64>(&checkpoint)?;
            if ckpt.benchmark_hash != cfg.benchmark_hash() {
                return Err(Error::Config(format!(
                    "checkpoint hash {} does not match config hash {}",
                    ckpt.benchmark_hash,
                    cfg.benchmark_hash()
                )));
            }
            let bench = generate_benchmark::<f64>(&cfg)?;
            let params = PolicyParams::from_flat(cfg.policy_shape(), ckpt.theta.clone())?;
            let adapters = (!ckpt.adapters.is_empty()).then_some(&ckpt.adapters[..]);
            println!(
                "checkpoint {} seed {} after {} domains",
                ckpt.label, ckpt.curriculum_seed, ckpt.domains_done
            );
            println!("i\tsr\tspl\tne\tgp");
            for i in 0..ckpt.domains_done {
                let domain_id = ckpt.matrix.domain_order[i];
                let means = evaluate_domain(
                    &params,
                    adapters,
                    bench.domain(domain_id)?,
                    cfg.training.eval_max_steps,
                )?;
                println!(
                    "{}\t{:.2}\t{:.2}\t{:.3}\t{:.3}",
                    i + 1,
                    means.sr,
                    means.spl,
                    means.ne,
                    means.gp
                );
            }
            Ok(())
        }
        Command::Sweep {
            common,
            capacities,
            strategies,
        } => {
            let cfg = load_config(&common, None)?;
            let caps = if capacities.is_empty() {
                cfg.experiment.memory_sweep.clone()
            } else {
                capacities
            };
            let strategy_keys = if strategies.is_empty() {
                vec!["perpr".to_string(), "esr".to_string()]
            } else {
                strategies
            };
            let seeds = match common.seed {
                Some(s) => vec![s],
                None => cfg.experiment.curriculum_seeds.clone(),
            };
            let bench = generate_benchmark::<f64>(&cfg)?;
            for key in &strategy_keys {
                let kind = StrategyKind::parse(key)?;
                for &cap in &caps {
                    let strat = strategy_config(&cfg, kind, Some(cap), false, false, false);
                    for &seed in &seeds {
                        run_one(&cfg, &bench, &strat, seed, &common.out, None)?;
                    }
                }
            }
            Ok(())
        }
        Command::Ablate {
            common,
            strategy,
            perpr_reverse,
            esr_no_lm,
            esr_no_lesr,
        } => {
            let cfg = load_config(&common, None)?;
            let kind = StrategyKind::parse(&strategy)?;
            let strat = strategy_config(&cfg, kind, None, perpr_reverse, esr_no_lm, esr_no_lesr);
            let seeds = match common.seed {
                Some(s) => vec![s],
                None => cfg.experiment.curriculum_seeds.clone(),
            };
            let bench = generate_benchmark::<f64>(&cfg)?;
            for &seed in &seeds {
                run_one(&cfg, &bench, &strat, seed, &common.out, None)?;
            }
            eprintln!("ablation rows labeled {:?}", strategy_label(&strat));
            Ok(())
        }
        Command::Report { common, input } => {
            let cfg = load_config(&common, None)?;
            let dir = input.unwrap_or_else(|| common.out.clone());
            let files = read_matrix_dir(&dir)?;
            let report = build_report(&files, &cfg)?;
            print!("{}", report.text);
            write_report(&common.out, &report)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("report written to {}", common.out.display());
            Ok(())
        }
    }
}

/// CLI entry point; returns the process exit code.
pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
