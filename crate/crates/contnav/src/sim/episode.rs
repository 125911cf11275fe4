//! Episodes and scene domains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::scene::{Candidate, Scene};

/// Instruction style of a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    /// Full route description given up front.
    InitialInstruction,
    /// Target plus a truncated hint, as after a partial dialogue.
    Dialogue,
}

impl Flavor {
    pub fn short(&self) -> &'static str {
        match self {
            Flavor::InitialInstruction => "I",
            Flavor::Dialogue => "D",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "I" | "i" => Ok(Flavor::InitialInstruction),
            "D" | "d" => Ok(Flavor::Dialogue),
            other => Err(Error::Config(format!("unknown flavor {other:?}"))),
        }
    }
}

/// One navigation task: instruction, endpoints and the demonstration
/// action sequence (indices into the per-step candidate lists; the last
/// action is always STOP at the goal).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: u32,
    pub scene_id: u32,
    pub start: u32,
    pub goal: u32,
    pub instruction: Vec<u32>,
    pub gt_actions: Vec<usize>,
    pub flavor: Flavor,
}

impl Episode {
    /// Number of demonstration steps (incl. the final STOP).
    pub fn num_steps(&self) -> usize {
        self.gt_actions.len()
    }

    /// Replay `gt_actions` through the scene: returns the visited node
    /// sequence and checks the episode is executable and ends with STOP
    /// at the goal.
    pub fn replay_ground_truth<S: Scalar>(&self, scene: &Scene<S>) -> Result<Vec<u32>> {
        let mut node = self.start;
        let mut trajectory = vec![node];
        for (i, &action) in self.gt_actions.iter().enumerate() {
            let cands = scene.candidate_actions(node)?;
            let cand = *cands.get(action).ok_or_else(|| {
                Error::Generation(format!(
                    "episode {}: action {} out of range at step {}",
                    self.episode_id, action, i
                ))
            })?;
            match cand {
                Candidate::Move(next) => {
                    if i + 1 == self.gt_actions.len() {
                        return Err(Error::Generation(format!(
                            "episode {}: last action is not STOP",
                            self.episode_id
                        )));
                    }
                    node = next;
                    trajectory.push(node);
                }
                Candidate::Stop => {
                    if i + 1 != self.gt_actions.len() {
                        return Err(Error::Generation(format!(
                            "episode {}: STOP before final step",
                            self.episode_id
                        )));
                    }
                }
            }
        }
        if node != self.goal {
            return Err(Error::Generation(format!(
                "episode {}: replay ends at {} not goal {}",
                self.episode_id, node, self.goal
            )));
        }
        Ok(trajectory)
    }
}

/// A bundle of scenes plus their train/val episodes; the unit of
/// sequential learning.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SceneDomain<S: Scalar> {
    pub domain_id: u32,
    pub scenes: Vec<Scene<S>>,
    pub train_episodes: Vec<Episode>,
    pub val_episodes: Vec<Episode>,
    /// First landmark token id owned by this domain.
    pub landmark_vocab_start: u32,
    /// Number of landmark tokens owned by this domain.
    pub landmark_vocab_len: u32,
}

impl<S: Scalar> SceneDomain<S> {
    pub fn scene(&self, scene_id: u32) -> Result<&Scene<S>> {
        self.scenes
            .iter()
            .find(|s| s.scene_id == scene_id)
            .ok_or(Error::UnknownNode {
                scene: scene_id,
                node: 0,
            })
    }

    /// Look up any episode (train or val) by id.
    pub fn episode(&self, episode_id: u32) -> Option<&Episode> {
        self.train_episodes
            .iter()
            .chain(&self.val_episodes)
            .find(|e| e.episode_id == episode_id)
    }
}
