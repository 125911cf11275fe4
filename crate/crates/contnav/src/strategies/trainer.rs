//! The per-domain training loop, strategy behaviors included.
//!
//! Per mini-batch the composite gradient is, by strategy:
//!
//! * Vanilla / Joint — imitation loss on the current batch only.
//! * L2 — plus a quadratic anchor to the previous domain's snapshot.
//! * RandR / PerpR — plus the imitation loss over a same-size batch drawn
//!   uniformly (with replacement) from replay memory.
//! * ESR — plus `lambda1` times the memory imitation loss and `lambda2`
//!   times the stored-logit deviation loss over the same memory batch.
//! * A-GEM — the current-batch gradient projected against the memory
//!   batch gradient.
//! * AdapterCL — only the current position's adapter trains (the base
//!   parameters co-train on the first domain and freeze afterwards).
//!
//! A rehearsal term asked for while memory is still empty (first domain)
//! is skipped: the parameter trajectory is then identical to Vanilla.
//! After the epochs finish the strategy's memory update runs against the
//! post-domain parameters.

use rand::seq::SliceRandom;

use crate::error::Result;
use crate::policy::{
    esr_loss_grad, imitation_loss_grad, l2_anchor_loss_grad, rollout, AdamHyper, AdamState,
    AdapterParams, PolicyParams, RolloutMode,
};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::sim::{Benchmark, Episode, Scene};
use crate::strategies::agem::agem_project;
use crate::strategies::config::{StrategyConfig, StrategyKind};
use crate::strategies::memory::ReplayMemory;
use crate::strategies::perplexity::action_perplexity;

/// Mutable training state carried across the curriculum.
#[derive(Debug, Clone)]
pub struct TrainerState<S: Scalar> {
    pub policy: PolicyParams<S>,
    pub adam: AdamState<S>,
    pub memory: ReplayMemory<S>,
    /// Previous-domain snapshot for the quadratic anchor.
    pub anchor: Option<Vec<S>>,
    /// Per-domain adapters, in curriculum order.
    pub adapters: Vec<AdapterParams<S>>,
}

impl<S: Scalar> TrainerState<S> {
    pub fn new(policy: PolicyParams<S>, memory_capacity: usize, total_domains: usize) -> Self {
        let n = policy.shape.param_count();
        TrainerState {
            policy,
            adam: AdamState::new(n),
            memory: ReplayMemory::new(memory_capacity, total_domains),
            anchor: None,
            adapters: Vec::new(),
        }
    }
}

/// Options that do not vary per strategy.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    /// Run seed; every stream this loop consumes derives from it.
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hyper: AdamHyper,
    /// Zero-based position of this domain in the curriculum.
    pub curriculum_pos: u32,
}

fn resolve<'a, S: Scalar>(
    bench: &'a Benchmark<S>,
    refs: &[(u32, u32)],
) -> Result<Vec<(&'a Scene<S>, &'a Episode)>> {
    refs.iter()
        .map(|&(d, e)| bench.lookup(d, e))
        .collect::<Result<Vec<_>>>()
}

/// Train on one domain (or, for Joint, on the pooled episode set) and run
/// the strategy's post-domain memory update.
///
/// `train_refs` lists the `(domain_id, episode_id)` pairs to optimize on;
/// `domain_id` names the domain being finished (it feeds the memory
/// update and is ignored by Joint).
pub fn train_domain<S: Scalar>(
    cfg: &StrategyConfig,
    state: &mut TrainerState<S>,
    bench: &Benchmark<S>,
    domain_id: u32,
    train_refs: &[(u32, u32)],
    opts: &TrainOptions,
) -> Result<()> {
    let kind = cfg.kind;
    let pos = opts.curriculum_pos as u64;
    let n_params = state.policy.shape.param_count();
    let freeze_base = kind == StrategyKind::AdapterCl && opts.curriculum_pos > 0;

    let mut adapter_train: Option<(AdapterParams<S>, AdamState<S>)> =
        if kind == StrategyKind::AdapterCl {
            let adapter = AdapterParams::init(
                state.policy.shape.scorer_input_dim(),
                cfg.adapter_rank,
                opts.seed,
                pos,
            );
            let opt = AdamState::new(adapter.param_count());
            Some((adapter, opt))
        } else {
            None
        };

    let mut order: Vec<usize> = (0..train_refs.len()).collect();
    for epoch in 0..opts.epochs {
        let mut shuffle_rng = stream_rng(opts.seed, Stream::BatchShuffle, &[pos, epoch as u64]);
        order.shuffle(&mut shuffle_rng);
        for (batch_idx, chunk) in order.chunks(opts.batch_size.max(1)).enumerate() {
            let refs: Vec<(u32, u32)> = chunk.iter().map(|&i| train_refs[i]).collect();
            let batch = resolve(bench, &refs)?;
            let context = format!(
                "strategy={} domain={} epoch={} batch={}",
                kind.label(),
                domain_id,
                epoch,
                batch_idx
            );

            let mut grad = vec![S::zero(); n_params];
            if let Some((adapter, adapter_opt)) = adapter_train.as_mut() {
                let mut d_down = vec![S::zero(); adapter.down.len()];
                let mut d_up = vec![S::zero(); adapter.up.len()];
                imitation_loss_grad(
                    &state.policy,
                    Some(adapter),
                    &batch,
                    S::one(),
                    &mut grad,
                    Some((&mut d_down, &mut d_up)),
                    freeze_base,
                )?;
                let mut flat = adapter.down.clone();
                flat.extend_from_slice(&adapter.up);
                let mut d_flat = d_down;
                d_flat.extend_from_slice(&d_up);
                adapter_opt.step(&mut flat, &d_flat, &opts.hyper, &context)?;
                let (down, up) = flat.split_at(adapter.down.len());
                adapter.down.copy_from_slice(down);
                adapter.up.copy_from_slice(up);
                if freeze_base {
                    continue;
                }
            } else {
                imitation_loss_grad(
                    &state.policy,
                    None,
                    &batch,
                    S::one(),
                    &mut grad,
                    None,
                    false,
                )?;
                match kind {
                    StrategyKind::Vanilla | StrategyKind::Joint | StrategyKind::AdapterCl => {}
                    StrategyKind::L2 => {
                        if let Some(anchor) = &state.anchor {
                            l2_anchor_loss_grad(
                                state.policy.theta(),
                                anchor,
                                S::of(cfg.lambda_l2),
                                &mut grad,
                            )?;
                        }
                    }
                    StrategyKind::RandR | StrategyKind::PerpR | StrategyKind::PerpRRev => {
                        if !state.memory.is_empty() {
                            let mut mem_rng = stream_rng(
                                opts.seed,
                                Stream::MemorySample,
                                &[pos, epoch as u64, batch_idx as u64],
                            );
                            let picks =
                                state.memory.sample_indices(batch.len(), &mut mem_rng);
                            let refs: Vec<(u32, u32)> = picks
                                .iter()
                                .map(|&i| {
                                    let e = &state.memory.entries[i];
                                    (e.domain_id, e.episode_id)
                                })
                                .collect();
                            let mem_batch = resolve(bench, &refs)?;
                            imitation_loss_grad(
                                &state.policy,
                                None,
                                &mem_batch,
                                S::one(),
                                &mut grad,
                                None,
                                false,
                            )?;
                        }
                    }
                    StrategyKind::Esr => {
                        let (lambda1, lambda2) = cfg.esr_weights();
                        if !state.memory.is_empty() && (lambda1 > 0.0 || lambda2 > 0.0) {
                            let mut mem_rng = stream_rng(
                                opts.seed,
                                Stream::MemorySample,
                                &[pos, epoch as u64, batch_idx as u64],
                            );
                            let picks =
                                state.memory.sample_indices(batch.len(), &mut mem_rng);
                            if lambda1 > 0.0 {
                                let refs: Vec<(u32, u32)> = picks
                                    .iter()
                                    .map(|&i| {
                                        let e = &state.memory.entries[i];
                                        (e.domain_id, e.episode_id)
                                    })
                                    .collect();
                                let mem_batch = resolve(bench, &refs)?;
                                imitation_loss_grad(
                                    &state.policy,
                                    None,
                                    &mem_batch,
                                    S::of(lambda1),
                                    &mut grad,
                                    None,
                                    false,
                                )?;
                            }
                            if lambda2 > 0.0 {
                                let weight = S::of(lambda2 / picks.len() as f64);
                                for &i in &picks {
                                    let entry = &state.memory.entries[i];
                                    let stored = entry
                                        .logits
                                        .as_ref()
                                        .expect("logit-replay entry carries stored logits");
                                    let (scene, episode) =
                                        bench.lookup(entry.domain_id, entry.episode_id)?;
                                    esr_loss_grad(
                                        &state.policy,
                                        scene,
                                        episode,
                                        stored,
                                        weight,
                                        &mut grad,
                                    )?;
                                }
                            }
                        }
                    }
                    StrategyKind::Agem => {
                        if !state.memory.is_empty() {
                            let mut mem_rng = stream_rng(
                                opts.seed,
                                Stream::MemorySample,
                                &[pos, epoch as u64, batch_idx as u64],
                            );
                            let picks =
                                state.memory.sample_indices(batch.len(), &mut mem_rng);
                            let refs: Vec<(u32, u32)> = picks
                                .iter()
                                .map(|&i| {
                                    let e = &state.memory.entries[i];
                                    (e.domain_id, e.episode_id)
                                })
                                .collect();
                            let mem_batch = resolve(bench, &refs)?;
                            let mut g_ref = vec![S::zero(); n_params];
                            imitation_loss_grad(
                                &state.policy,
                                None,
                                &mem_batch,
                                S::one(),
                                &mut g_ref,
                                None,
                                false,
                            )?;
                            grad = agem_project(&grad, &g_ref);
                        }
                    }
                }
            }
            state
                .adam
                .step(state.policy.theta_mut(), &grad, &opts.hyper, &context)?;
        }
    }

    if let Some((adapter, _)) = adapter_train {
        state.adapters.push(adapter);
    }

    // Post-domain snapshot bookkeeping and memory update, all with the
    // parameters the domain finished on.
    match kind {
        StrategyKind::L2 => {
            state.anchor = Some(state.policy.flatten());
        }
        StrategyKind::PerpR | StrategyKind::PerpRRev => {
            let domain = bench.domain(domain_id)?;
            let mut scored: Vec<(u32, S)> = Vec::with_capacity(domain.train_episodes.len());
            for episode in &domain.train_episodes {
                let scene = domain.scene(episode.scene_id)?;
                let ap = action_perplexity(&state.policy, None, scene, episode)?;
                scored.push((episode.episode_id, ap));
            }
            state
                .memory
                .perplexity_update(opts.curriculum_pos, domain_id, &scored, cfg.perpr_reversed())?;
        }
        StrategyKind::Esr => {
            let domain = bench.domain(domain_id)?;
            let mut rng = stream_rng(opts.seed, Stream::MemoryUpdate, &[pos]);
            let mut indices: Vec<usize> = (0..domain.train_episodes.len()).collect();
            indices.shuffle(&mut rng);
            let quota = state.memory.per_domain_quota.min(indices.len());
            let mut selected = indices[..quota].to_vec();
            selected.sort_unstable();
            let mut recorded = Vec::with_capacity(quota);
            for idx in selected {
                let episode = &domain.train_episodes[idx];
                let scene = domain.scene(episode.scene_id)?;
                let out = rollout(
                    &state.policy,
                    None,
                    scene,
                    episode,
                    RolloutMode::TeacherForced,
                    episode.num_steps(),
                )?;
                recorded.push((episode.episode_id, out.store_logits()));
            }
            state
                .memory
                .logit_update(opts.curriculum_pos, domain_id, recorded, &mut rng)?;
        }
        StrategyKind::RandR | StrategyKind::Agem => {
            let domain = bench.domain(domain_id)?;
            let mut rng = stream_rng(opts.seed, Stream::Reservoir, &[pos]);
            for episode in &domain.train_episodes {
                state.memory.reservoir_push(
                    opts.curriculum_pos,
                    domain_id,
                    episode.episode_id,
                    &mut rng,
                );
            }
        }
        StrategyKind::Vanilla | StrategyKind::Joint | StrategyKind::AdapterCl => {}
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyShape;
    use crate::sim::{generate_domain, vocab, Flavor, GenParams};

    fn tiny_benchmark(domains: usize) -> Benchmark<f64> {
        let gen = GenParams {
            train_episodes: 12,
            val_episodes: 4,
            nodes_per_scene: 14,
            num_scenes: 2,
            ..GenParams::default()
        };
        Benchmark {
            flavor: Flavor::InitialInstruction,
            domains: (0..domains)
                .map(|d| {
                    generate_domain::<f64>(d as u32, 99, Flavor::InitialInstruction, &gen).unwrap()
                })
                .collect(),
        }
    }

    fn fresh_state(bench: &Benchmark<f64>, capacity: usize) -> TrainerState<f64> {
        let gen = GenParams::default();
        let shape = PolicyShape {
            vocab: vocab::vocab_size(bench.domains.len(), 2 * 14),
            embed_dim: 8,
            feature_dim: gen.feature_dim,
            hidden_dim: 12,
            action_dim: 4,
            max_degree: gen.max_degree,
        };
        TrainerState::new(PolicyParams::init(shape, 42), capacity, bench.domains.len())
    }

    fn opts(pos: u32) -> TrainOptions {
        TrainOptions {
            seed: 7,
            epochs: 2,
            batch_size: 4,
            hyper: AdamHyper::with_lr(3e-3),
            curriculum_pos: pos,
        }
    }

    fn domain_refs(bench: &Benchmark<f64>, d: u32) -> Vec<(u32, u32)> {
        bench.domains[d as usize]
            .train_episodes
            .iter()
            .map(|e| (d, e.episode_id))
            .collect()
    }

    #[test]
    fn rehearsal_strategies_reduce_to_vanilla_on_first_domain() {
        let bench = tiny_benchmark(2);
        let refs = domain_refs(&bench, 0);
        let mut vanilla = fresh_state(&bench, 4);
        train_domain(
            &StrategyConfig::for_kind(StrategyKind::Vanilla),
            &mut vanilla,
            &bench,
            0,
            &refs,
            &opts(0),
        )
        .unwrap();
        for kind in [
            StrategyKind::RandR,
            StrategyKind::PerpR,
            StrategyKind::Esr,
            StrategyKind::Agem,
            StrategyKind::L2,
        ] {
            let mut state = fresh_state(&bench, 4);
            let mut cfg = StrategyConfig::for_kind(kind);
            cfg.memory_capacity = 4;
            train_domain(&cfg, &mut state, &bench, 0, &refs, &opts(0)).unwrap();
            assert_eq!(
                state.policy.theta(),
                vanilla.policy.theta(),
                "{} deviated from Vanilla on the first domain",
                kind.label()
            );
        }
    }

    #[test]
    fn esr_with_zero_weights_matches_vanilla_afterwards() {
        let bench = tiny_benchmark(2);
        let mut vanilla = fresh_state(&bench, 4);
        let mut esr_off = fresh_state(&bench, 4);
        let mut cfg = StrategyConfig::for_kind(StrategyKind::Esr);
        cfg.memory_capacity = 4;
        cfg.esr_use_lm = false;
        cfg.esr_use_lesr = false;
        for d in 0..2u32 {
            let refs = domain_refs(&bench, d);
            train_domain(
                &StrategyConfig::for_kind(StrategyKind::Vanilla),
                &mut vanilla,
                &bench,
                d,
                &refs,
                &opts(d),
            )
            .unwrap();
            train_domain(&cfg, &mut esr_off, &bench, d, &refs, &opts(d)).unwrap();
        }
        assert_eq!(esr_off.policy.theta(), vanilla.policy.theta());
        // The memory still recorded entries even though the loss ignored it.
        assert!(!esr_off.memory.is_empty());
    }

    #[test]
    fn l2_with_zero_lambda_matches_vanilla() {
        let bench = tiny_benchmark(2);
        let mut vanilla = fresh_state(&bench, 4);
        let mut l2 = fresh_state(&bench, 4);
        let mut cfg = StrategyConfig::for_kind(StrategyKind::L2);
        cfg.lambda_l2 = 0.0;
        for d in 0..2u32 {
            let refs = domain_refs(&bench, d);
            train_domain(
                &StrategyConfig::for_kind(StrategyKind::Vanilla),
                &mut vanilla,
                &bench,
                d,
                &refs,
                &opts(d),
            )
            .unwrap();
            train_domain(&cfg, &mut l2, &bench, d, &refs, &opts(d)).unwrap();
        }
        assert_eq!(l2.policy.theta(), vanilla.policy.theta());
    }

    #[test]
    fn perplexity_memory_holds_top_quota_after_first_domain() {
        let bench = tiny_benchmark(2);
        let mut state = fresh_state(&bench, 8);
        let mut cfg = StrategyConfig::for_kind(StrategyKind::PerpR);
        cfg.memory_capacity = 8;
        let refs = domain_refs(&bench, 0);
        train_domain(&cfg, &mut state, &bench, 0, &refs, &opts(0)).unwrap();

        // Recompute perplexities with the post-domain parameters and
        // check the memory holds exactly the top-quota episodes.
        let domain = &bench.domains[0];
        let mut scored: Vec<(u32, f64)> = domain
            .train_episodes
            .iter()
            .map(|e| {
                let scene = domain.scene(e.scene_id).unwrap();
                (
                    e.episode_id,
                    action_perplexity(&state.policy, None, scene, e).unwrap(),
                )
            })
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let quota = state.memory.per_domain_quota;
        let expect: std::collections::BTreeSet<u32> =
            scored[..quota].iter().map(|&(id, _)| id).collect();
        let got: std::collections::BTreeSet<u32> =
            state.memory.entries.iter().map(|e| e.episode_id).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn esr_fresh_entries_have_zero_loss_at_snapshot() {
        let bench = tiny_benchmark(2);
        let mut state = fresh_state(&bench, 6);
        let mut cfg = StrategyConfig::for_kind(StrategyKind::Esr);
        cfg.memory_capacity = 6;
        let refs = domain_refs(&bench, 0);
        train_domain(&cfg, &mut state, &bench, 0, &refs, &opts(0)).unwrap();
        assert_eq!(state.memory.len(), 3); // quota = 6 / 2 domains
        let n = state.policy.shape.param_count();
        for entry in &state.memory.entries {
            let (scene, episode) = bench.lookup(entry.domain_id, entry.episode_id).unwrap();
            let mut sink = vec![0.0; n];
            let loss = esr_loss_grad(
                &state.policy,
                scene,
                episode,
                entry.logits.as_ref().unwrap(),
                0.0,
                &mut sink,
            )
            .unwrap();
            assert!(loss <= 1e-18 * episode.num_steps() as f64);
        }
    }

    #[test]
    fn adaptercl_freezes_base_after_first_domain() {
        let bench = tiny_benchmark(2);
        let mut state = fresh_state(&bench, 4);
        let cfg = StrategyConfig::for_kind(StrategyKind::AdapterCl);
        let refs0 = domain_refs(&bench, 0);
        train_domain(&cfg, &mut state, &bench, 0, &refs0, &opts(0)).unwrap();
        assert_eq!(state.adapters.len(), 1);
        let base_after_first = state.policy.flatten();

        let refs1 = domain_refs(&bench, 1);
        train_domain(&cfg, &mut state, &bench, 1, &refs1, &opts(1)).unwrap();
        assert_eq!(state.adapters.len(), 2);
        assert_eq!(state.policy.flatten(), base_after_first);
        // The second adapter actually trained (its up projection moved).
        assert!(state.adapters[1].up.iter().any(|&v| v != 0.0));
    }
}
