//! Per-episode metrics and per-domain evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{rollout, AdapterParams, PolicyParams, RolloutMode};
use crate::scalar::Scalar;
use crate::sim::{Episode, Scene, SceneDomain};
use crate::strategies::adaptercl_select;

/// An episode counts as a success when the agent stops within this
/// distance of the goal (standard indoor-navigation convention).
pub const SUCCESS_THRESHOLD_M: f64 = 3.0;

/// The four reported metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    /// Success rate, percent.
    Sr,
    /// Success weighted by inverse path length, percent.
    Spl,
    /// Navigation error, meters.
    Ne,
    /// Goal progress, meters.
    Gp,
}

impl Metric {
    pub fn key(&self) -> &'static str {
        match self {
            Metric::Sr => "sr",
            Metric::Spl => "spl",
            Metric::Ne => "ne",
            Metric::Gp => "gp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sr" => Ok(Metric::Sr),
            "spl" => Ok(Metric::Spl),
            "ne" => Ok(Metric::Ne),
            "gp" => Ok(Metric::Gp),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }

    pub const ALL: [Metric; 4] = [Metric::Sr, Metric::Spl, Metric::Ne, Metric::Gp];
}

/// Outcome of a single evaluated episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult<S: Scalar> {
    pub success: bool,
    /// Success weighted by inverse path length, in [0, 1].
    pub spl_term: S,
    /// Final distance to the goal, meters.
    pub ne: S,
    /// Reduction in goal distance achieved by the walk, meters.
    pub gp: S,
    pub path_length_taken: S,
    pub shortest_length: S,
}

/// Score a trajectory against its episode.
///
/// `trajectory` must start at the episode start and move only along
/// scene edges. Distances to the goal are metric shortest-path
/// distances.
pub fn episode_metrics<S: Scalar>(
    trajectory: &[u32],
    episode: &Episode,
    scene: &Scene<S>,
) -> Result<EpisodeResult<S>> {
    if trajectory.first() != Some(&episode.start) {
        return Err(Error::IllegalTrajectory {
            from: episode.start,
            to: *trajectory.first().unwrap_or(&episode.start),
        });
    }
    let mut taken = S::zero();
    for pair in trajectory.windows(2) {
        match scene.edge_length(pair[0], pair[1]) {
            Some(len) => taken += len,
            None => {
                return Err(Error::IllegalTrajectory {
                    from: pair[0],
                    to: pair[1],
                })
            }
        }
    }
    let goal_dist = scene.distances_from(episode.goal)?;
    let end = *trajectory.last().expect("nonempty trajectory");
    let ne = goal_dist[end as usize];
    let shortest = goal_dist[episode.start as usize];
    let success = ne <= S::of(SUCCESS_THRESHOLD_M);
    let spl_term = if shortest == S::zero() {
        if success {
            S::one()
        } else {
            S::zero()
        }
    } else if success {
        shortest / taken.max(shortest)
    } else {
        S::zero()
    };
    Ok(EpisodeResult {
        success,
        spl_term,
        ne,
        gp: shortest - ne,
        path_length_taken: taken,
        shortest_length: shortest,
    })
}

/// Per-domain means: SR and SPL as percentages, NE and GP in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainMeans {
    pub sr: f64,
    pub spl: f64,
    pub ne: f64,
    pub gp: f64,
}

impl DomainMeans {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Sr => self.sr,
            Metric::Spl => self.spl,
            Metric::Ne => self.ne,
            Metric::Gp => self.gp,
        }
    }
}

/// Greedy-evaluate the policy on a domain's validation episodes.
///
/// No domain identity reaches the agent. When `adapters` is provided
/// (adapter-based runs), the lowest-perplexity adapter is selected per
/// episode before the rollout.
pub fn evaluate_domain<S: Scalar>(
    params: &PolicyParams<S>,
    adapters: Option<&[AdapterParams<S>]>,
    domain: &SceneDomain<S>,
    max_steps: usize,
) -> Result<DomainMeans> {
    let mut sr = 0.0;
    let mut spl = 0.0;
    let mut ne = 0.0;
    let mut gp = 0.0;
    let count = domain.val_episodes.len();
    if count == 0 {
        return Err(Error::Config(format!(
            "domain {} has no validation episodes",
            domain.domain_id
        )));
    }
    for episode in &domain.val_episodes {
        let scene = domain.scene(episode.scene_id)?;
        let adapter = match adapters {
            Some(list) => {
                let idx = adaptercl_select(params, list, scene, episode)?;
                Some(&list[idx])
            }
            None => None,
        };
        let out = rollout(
            params,
            adapter,
            scene,
            episode,
            RolloutMode::Greedy,
            max_steps,
        )?;
        let result = episode_metrics(&out.trajectory, episode, scene)?;
        sr += if result.success { 100.0 } else { 0.0 };
        spl += 100.0 * result.spl_term.as_f64();
        ne += result.ne.as_f64();
        gp += result.gp.as_f64();
    }
    let n = count as f64;
    Ok(DomainMeans {
        sr: sr / n,
        spl: spl / n,
        ne: ne / n,
        gp: gp / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Flavor;

    /// Chain 0-1-2 with both edges 5 m: shortest 0->2 is 10 m.
    fn chain_scene() -> Scene<f64> {
        Scene {
            scene_id: 0,
            positions: vec![[0.0, 0.0], [5.0, 0.0], [10.0, 0.0]],
            features: vec![vec![0.0; 2]; 3],
            landmarks: vec![12, 13, 14],
            adjacency: vec![
                vec![(1, 5.0)],
                vec![(0, 5.0), (2, 5.0)],
                vec![(1, 5.0)],
            ],
        }
    }

    fn chain_episode() -> Episode {
        Episode {
            episode_id: 0,
            scene_id: 0,
            start: 0,
            goal: 2,
            instruction: vec![0, 1],
            gt_actions: vec![0, 1, 2],
            flavor: Flavor::InitialInstruction,
        }
    }

    #[test]
    fn optimal_trajectory_scores_perfectly() {
        let scene = chain_scene();
        let ep = chain_episode();
        let r = episode_metrics(&[0, 1, 2], &ep, &scene).unwrap();
        assert!(r.success);
        assert_eq!(r.spl_term, 1.0);
        assert_eq!(r.ne, 0.0);
        assert_eq!(r.gp, 10.0);
    }

    #[test]
    fn motionless_agent_scores_zero_progress() {
        let scene = chain_scene();
        let ep = chain_episode();
        let r = episode_metrics(&[0], &ep, &scene).unwrap();
        assert!(!r.success);
        assert_eq!(r.spl_term, 0.0);
        assert_eq!(r.ne, 10.0);
        assert_eq!(r.gp, 0.0);
    }

    #[test]
    fn detour_halves_spl() {
        // Success with shortest 10 and traversed 20 -> spl_term 0.5.
        let scene = chain_scene();
        let ep = chain_episode();
        let r = episode_metrics(&[0, 1, 0, 1, 2], &ep, &scene).unwrap();
        assert!(r.success);
        assert_eq!(r.path_length_taken, 20.0);
        assert_eq!(r.spl_term, 0.5);
    }

    #[test]
    fn start_equals_goal_degenerate_spl() {
        let scene = chain_scene();
        let mut ep = chain_episode();
        ep.goal = 0;
        let r = episode_metrics(&[0], &ep, &scene).unwrap();
        assert!(r.success);
        assert_eq!(r.spl_term, 1.0);
    }

    #[test]
    fn non_adjacent_transition_is_illegal() {
        let scene = chain_scene();
        let ep = chain_episode();
        let err = episode_metrics(&[0, 2], &ep, &scene).unwrap_err();
        assert!(matches!(err, Error::IllegalTrajectory { from: 0, to: 2 }));
    }

    #[test]
    fn ground_truth_gp_equals_start_goal_distance() {
        use crate::sim::{generate_domain, GenParams};
        let domain =
            generate_domain::<f64>(0, 31, Flavor::InitialInstruction, &GenParams::default())
                .unwrap();
        for ep in domain.train_episodes.iter().take(20) {
            let scene = domain.scene(ep.scene_id).unwrap();
            let gt = ep.replay_ground_truth(scene).unwrap();
            let r = episode_metrics(&gt, ep, scene).unwrap();
            let (_, shortest) = scene.shortest_path(ep.start, ep.goal).unwrap();
            assert!((r.gp - shortest).abs() < 1e-9);
            assert!(r.success);
        }
    }
}
