//! Training losses with exact gradients.

use crate::error::{Error, Result};
use crate::policy::adapter::AdapterParams;
use crate::policy::forward::{log_softmax, softmax, EpisodeContext};
use crate::policy::params::{PolicyParams, PrevAction};
use crate::policy::rollout::StoredLogits;
use crate::scalar::Scalar;
use crate::sim::{Candidate, Episode, Scene};

/// Cross-entropy imitation loss under teacher forcing.
///
/// Returns the unweighted loss (mean over episodes of the summed per-step
/// negative log-likelihood of the demonstrated actions) and accumulates
/// `weight` times its gradient into `d_theta` (and into `d_adapter` when
/// an adapter is active). `freeze_base` restricts accumulation to the
/// adapter.
#[allow(clippy::too_many_arguments)]
pub fn imitation_loss_grad<S: Scalar>(
    params: &PolicyParams<S>,
    adapter: Option<&AdapterParams<S>>,
    batch: &[(&Scene<S>, &Episode)],
    weight: S,
    d_theta: &mut [S],
    mut d_adapter: Option<(&mut [S], &mut [S])>,
    freeze_base: bool,
) -> Result<S> {
    if batch.is_empty() {
        return Err(Error::Config("imitation loss over empty batch".into()));
    }
    let batch_inv = S::one() / S::of(batch.len() as f64);
    let mut total = S::zero();
    for &(scene, episode) in batch {
        let ctx = EpisodeContext::new(params, adapter, scene, &episode.instruction)?;
        let mut d_instr = vec![S::zero(); params.shape.embed_dim];
        let mut node = episode.start;
        let mut prev = PrevAction::None;
        for &target in &episode.gt_actions {
            let eval = ctx.eval_step(node, prev)?;
            if target >= eval.candidates.len() {
                return Err(Error::DimensionMismatch(format!(
                    "ground-truth action {} out of range at node {}",
                    target, node
                )));
            }
            total = total - log_softmax(&eval.logits)[target];

            let probs = softmax(&eval.logits);
            let dldz: Vec<S> = probs
                .iter()
                .enumerate()
                .map(|(c, &p)| {
                    let delta = if c == target { S::one() } else { S::zero() };
                    (p - delta) * weight * batch_inv
                })
                .collect();
            let da = d_adapter.as_mut().map(|(d, u)| (&mut **d, &mut **u));
            ctx.backward_step(&eval, &dldz, d_theta, &mut d_instr, da, freeze_base);

            match eval.candidates[target] {
                Candidate::Stop => {}
                Candidate::Move(next) => {
                    node = next;
                    prev = PrevAction::Index(target);
                }
            }
        }
        if !freeze_base {
            ctx.finish_backward(&d_instr, d_theta);
        }
    }
    Ok(total * batch_inv)
}

/// Squared-deviation loss against stored per-step logits, evaluated
/// along the stored trajectory (the stored actions drive the walk).
///
/// Returns the per-episode loss `sum_n ||z_n - f(v_n)||^2` and
/// accumulates `weight` times its gradient into `d_theta`.
pub fn esr_loss_grad<S: Scalar>(
    params: &PolicyParams<S>,
    scene: &Scene<S>,
    episode: &Episode,
    stored: &StoredLogits<S>,
    weight: S,
    d_theta: &mut [S],
) -> Result<S> {
    let ctx = EpisodeContext::new(params, None, scene, &episode.instruction)?;
    let mut d_instr = vec![S::zero(); params.shape.embed_dim];
    let mut node = episode.start;
    let mut prev = PrevAction::None;
    let mut total = S::zero();
    let two = S::of(2.0);
    for (step_idx, step) in stored.steps.iter().enumerate() {
        let eval = ctx.eval_step(node, prev)?;
        if step.logits.len() != eval.candidates.len() || step.action >= eval.candidates.len() {
            return Err(Error::StaleLogits {
                step: step_idx,
                stored: step.logits.len(),
                actual: eval.candidates.len(),
            });
        }
        let mut dldz = vec![S::zero(); eval.logits.len()];
        for (c, slot) in dldz.iter_mut().enumerate() {
            let diff = eval.logits[c] - step.logits[c];
            total += diff * diff;
            *slot = two * diff * weight;
        }
        ctx.backward_step(&eval, &dldz, d_theta, &mut d_instr, None, false);

        match eval.candidates[step.action] {
            Candidate::Stop => break,
            Candidate::Move(next) => {
                node = next;
                prev = PrevAction::Index(step.action);
            }
        }
    }
    ctx.finish_backward(&d_instr, d_theta);
    Ok(total)
}

/// Quadratic anchor `lambda * ||theta - anchor||^2` with its gradient
/// `2 lambda (theta - anchor)` accumulated into `d_theta`.
pub fn l2_anchor_loss_grad<S: Scalar>(
    theta: &[S],
    anchor: &[S],
    lambda: S,
    d_theta: &mut [S],
) -> Result<S> {
    if theta.len() != anchor.len() || theta.len() != d_theta.len() {
        return Err(Error::DimensionMismatch(format!(
            "anchor has {} entries, parameters have {}",
            anchor.len(),
            theta.len()
        )));
    }
    let mut loss = S::zero();
    let two_lambda = S::of(2.0) * lambda;
    for i in 0..theta.len() {
        let diff = theta[i] - anchor[i];
        loss += diff * diff;
        d_theta[i] += two_lambda * diff;
    }
    Ok(lambda * loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::params::PolicyShape;
    use crate::policy::rollout::{rollout, RolloutMode};
    use crate::sim::{generate_domain, vocab, Flavor, GenParams};

    fn setup() -> (crate::sim::SceneDomain<f64>, PolicyParams<f64>) {
        let gen = GenParams::default();
        let domain = generate_domain::<f64>(0, 21, Flavor::InitialInstruction, &gen).unwrap();
        let shape = PolicyShape {
            vocab: vocab::vocab_size(1, gen.landmarks_per_domain()),
            embed_dim: 6,
            feature_dim: gen.feature_dim,
            hidden_dim: 8,
            action_dim: 4,
            max_degree: gen.max_degree,
        };
        (domain, PolicyParams::init(shape, 5))
    }

    #[test]
    fn uniform_single_step_loss_is_ln_k() {
        // One-step episode (start == goal is not generated, so craft one:
        // take any episode and keep only its final STOP at the start node).
        let (domain, _) = setup();
        let src = &domain.train_episodes[0];
        let scene = domain.scene(src.scene_id).unwrap();
        let k = scene.candidate_count(src.start).unwrap();
        let episode = Episode {
            episode_id: 9999,
            scene_id: src.scene_id,
            start: src.start,
            goal: src.start,
            instruction: src.instruction.clone(),
            gt_actions: vec![k - 1], // STOP immediately
            flavor: src.flavor,
        };
        let zero = PolicyParams::<f64>::zeros(PolicyShape {
            vocab: 2000,
            embed_dim: 6,
            feature_dim: 8,
            hidden_dim: 8,
            action_dim: 4,
            max_degree: 6,
        });
        let mut grad = vec![0.0; zero.shape.param_count()];
        let loss =
            imitation_loss_grad(&zero, None, &[(scene, &episode)], 1.0, &mut grad, None, false)
                .unwrap();
        assert!((loss - (k as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn duplicated_batch_keeps_mean_loss_and_grad() {
        let (domain, policy) = setup();
        let eps: Vec<_> = domain
            .train_episodes
            .iter()
            .take(3)
            .map(|e| (domain.scene(e.scene_id).unwrap(), e))
            .collect();
        let mut doubled = eps.clone();
        doubled.extend(eps.iter().cloned());

        let n = policy.shape.param_count();
        let mut g1 = vec![0.0; n];
        let l1 = imitation_loss_grad(&policy, None, &eps, 1.0, &mut g1, None, false).unwrap();
        let mut g2 = vec![0.0; n];
        let l2 = imitation_loss_grad(&policy, None, &doubled, 1.0, &mut g2, None, false).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn esr_loss_zero_at_recording_params() {
        let (domain, policy) = setup();
        for ep in domain.train_episodes.iter().take(5) {
            let scene = domain.scene(ep.scene_id).unwrap();
            let rec = rollout(&policy, None, scene, ep, RolloutMode::TeacherForced, 50).unwrap();
            let stored = rec.store_logits();
            let mut grad = vec![0.0; policy.shape.param_count()];
            let loss = esr_loss_grad(&policy, scene, ep, &stored, 1.0, &mut grad).unwrap();
            assert!(loss <= 1e-18 * stored.steps.len() as f64);
            assert!(grad.iter().all(|&g| g.abs() <= 1e-15));
        }
    }

    #[test]
    fn esr_one_step_hand_value() {
        // Stored logits (1, -1) against current logits (0, 0):
        // loss = (0-1)^2 + (0+1)^2 = 2.
        let scene = crate::sim::Scene::<f64> {
            scene_id: 77,
            positions: vec![[0.0, 0.0], [1.0, 0.0]],
            features: vec![vec![0.0; 8]; 2],
            landmarks: vec![12, 13],
            adjacency: vec![vec![(1, 1.0)], vec![(0, 1.0)]],
        };
        let episode = Episode {
            episode_id: 0,
            scene_id: 77,
            start: 0,
            goal: 0,
            instruction: vec![0, 12, 1],
            gt_actions: vec![1], // STOP
            flavor: Flavor::InitialInstruction,
        };
        let zero = PolicyParams::<f64>::zeros(PolicyShape {
            vocab: 20,
            embed_dim: 6,
            feature_dim: 8,
            hidden_dim: 8,
            action_dim: 4,
            max_degree: 6,
        });
        let stored = StoredLogits {
            steps: vec![crate::policy::rollout::StoredStep {
                logits: vec![1.0, -1.0],
                action: 1,
            }],
        };
        let mut grad = vec![0.0; zero.shape.param_count()];
        let loss = esr_loss_grad(&zero, &scene, &episode, &stored, 1.0, &mut grad).unwrap();
        assert_eq!(loss, 2.0);
    }

    /// Central-difference check of the analytic gradient on a sample of
    /// coordinates. `floor` guards the relative error against coordinates
    /// where both sides are essentially zero.
    fn fd_check(
        policy: &PolicyParams<f64>,
        loss_at: impl Fn(&PolicyParams<f64>) -> f64,
        grad: &[f64],
        coords: &[usize],
    ) -> f64 {
        let h = 1e-5;
        let floor = 1e-6;
        let mut worst = 0.0f64;
        for &i in coords {
            let mut plus = policy.clone();
            plus.theta_mut()[i] += h;
            let mut minus = policy.clone();
            minus.theta_mut()[i] -= h;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(floor);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn imitation_gradient_matches_finite_differences() {
        let (domain, policy) = setup();
        let batch: Vec<_> = domain
            .train_episodes
            .iter()
            .take(4)
            .map(|e| (domain.scene(e.scene_id).unwrap(), e))
            .collect();
        let n = policy.shape.param_count();
        let mut grad = vec![0.0; n];
        imitation_loss_grad(&policy, None, &batch, 1.0, &mut grad, None, false).unwrap();

        let coords: Vec<usize> = (0..50).map(|k| (k * 7919) % n).collect();
        let worst = fd_check(
            &policy,
            |p| {
                let mut sink = vec![0.0; n];
                imitation_loss_grad(p, None, &batch, 0.0, &mut sink, None, false).unwrap()
            },
            &grad,
            &coords,
        );
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn esr_gradient_matches_finite_differences() {
        let (domain, policy) = setup();
        let ep = &domain.train_episodes[2];
        let scene = domain.scene(ep.scene_id).unwrap();
        let rec = rollout(&policy, None, scene, ep, RolloutMode::TeacherForced, 50).unwrap();
        let stored = rec.store_logits();
        // Evaluate at parameters different from the recording ones.
        let other = PolicyParams::init(policy.shape, 1234);
        let n = policy.shape.param_count();
        let mut grad = vec![0.0; n];
        esr_loss_grad(&other, scene, ep, &stored, 1.0, &mut grad).unwrap();

        let coords: Vec<usize> = (0..50).map(|k| (k * 6037) % n).collect();
        let worst = fd_check(
            &other,
            |p| {
                let mut sink = vec![0.0; n];
                esr_loss_grad(p, scene, ep, &stored, 0.0, &mut sink).unwrap()
            },
            &grad,
            &coords,
        );
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn adapter_gradient_matches_finite_differences() {
        use crate::policy::adapter::AdapterParams;
        let (domain, policy) = setup();
        let batch: Vec<_> = domain
            .train_episodes
            .iter()
            .take(2)
            .map(|e| (domain.scene(e.scene_id).unwrap(), e))
            .collect();
        let mut adapter = AdapterParams::<f64>::init(policy.shape.scorer_input_dim(), 4, 3, 0);
        // Random up-projection so the adapter path is active.
        for (i, slot) in adapter.up.iter_mut().enumerate() {
            *slot = 0.05 * ((i as f64 * 0.7).sin());
        }

        let n = policy.shape.param_count();
        let dn = adapter.down.len();
        let mut d_theta = vec![0.0; n];
        let mut d_down = vec![0.0; dn];
        let mut d_up = vec![0.0; adapter.up.len()];
        imitation_loss_grad(
            &policy,
            Some(&adapter),
            &batch,
            1.0,
            &mut d_theta,
            Some((&mut d_down, &mut d_up)),
            false,
        )
        .unwrap();

        let loss_with = |a: &AdapterParams<f64>| {
            let mut sink = vec![0.0; n];
            imitation_loss_grad(&policy, Some(a), &batch, 0.0, &mut sink, None, false).unwrap()
        };
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in (0..dn).step_by(13) {
            let mut plus = adapter.clone();
            plus.down[i] += h;
            let mut minus = adapter.clone();
            minus.down[i] -= h;
            let fd = (loss_with(&plus) - loss_with(&minus)) / (2.0 * h);
            let rel = (d_down[i] - fd).abs() / d_down[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        for i in (0..adapter.up.len()).step_by(13) {
            let mut plus = adapter.clone();
            plus.up[i] += h;
            let mut minus = adapter.clone();
            minus.up[i] -= h;
            let fd = (loss_with(&plus) - loss_with(&minus)) / (2.0 * h);
            let rel = (d_up[i] - fd).abs() / d_up[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        // Base parameters must also stay correct with the adapter active.
        let coords: Vec<usize> = (0..30).map(|k| (k * 7919) % n).collect();
        let worst_base = fd_check(
            &policy,
            |p| {
                let mut sink = vec![0.0; n];
                imitation_loss_grad(p, Some(&adapter), &batch, 0.0, &mut sink, None, false)
                    .unwrap()
            },
            &d_theta,
            &coords,
        );
        assert!(worst < 1e-4, "worst adapter relative error {worst}");
        assert!(worst_base < 1e-4, "worst base relative error {worst_base}");
    }

    #[test]
    fn l2_anchor_hand_values() {
        let theta = vec![1.0f64, 2.0];
        let anchor = vec![0.0f64, 0.0];
        let mut grad = vec![0.0f64; 2];
        let loss = l2_anchor_loss_grad(&theta, &anchor, 0.1, &mut grad).unwrap();
        assert!((loss - 0.5).abs() < 1e-15);
        assert!((grad[0] - 0.2).abs() < 1e-15);
        assert!((grad[1] - 0.4).abs() < 1e-15);

        let mut g2 = vec![0.0; 2];
        let l2 = l2_anchor_loss_grad(&theta, &theta, 0.1, &mut g2).unwrap();
        assert_eq!(l2, 0.0);
        assert_eq!(g2, vec![0.0, 0.0]);
    }
}
