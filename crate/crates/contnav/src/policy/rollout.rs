//! Trajectory rollouts under the three execution regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::adapter::AdapterParams;
use crate::policy::forward::{log_softmax, EpisodeContext};
use crate::policy::params::{PolicyParams, PrevAction};
use crate::scalar::Scalar;
use crate::sim::{Candidate, Episode, Scene};

/// Per-step logits recorded at snapshot time, together with the action
/// that was executed when they were recorded. Replaying the stored
/// actions pins the replay trajectory to the recording trajectory, which
/// is what makes re-recording under unchanged parameters a no-op.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct StoredLogits<S: Scalar> {
    pub steps: Vec<StoredStep<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct StoredStep<S: Scalar> {
    pub logits: Vec<S>,
    pub action: usize,
}

/// How actions are chosen during a rollout.
#[derive(Debug, Clone, Copy)]
pub enum RolloutMode<'a, S: Scalar> {
    /// Execute the episode's ground-truth actions.
    TeacherForced,
    /// Execute the argmax of the current model's logits (ties broken by
    /// the lowest candidate index) until STOP or the step cap.
    Greedy,
    /// Execute the stored action sequence while recording the current
    /// model's logits at each revisited node.
    LogitForced(&'a StoredLogits<S>),
}

/// One executed step.
#[derive(Debug, Clone)]
pub struct StepTrace<S: Scalar> {
    pub node: u32,
    pub candidates: Vec<Candidate>,
    /// Current model's logits, one per candidate.
    pub logits: Vec<S>,
    /// Log-probability (under the current model) of the executed action.
    pub log_prob: S,
    /// Executed action index.
    pub action: usize,
}

#[derive(Debug, Clone)]
pub struct Rollout<S: Scalar> {
    pub steps: Vec<StepTrace<S>>,
    /// Visited node sequence, starting at the episode start.
    pub trajectory: Vec<u32>,
}

/// Index of the largest logit; ties go to the lowest index.
pub(crate) fn argmax<S: Scalar>(logits: &[S]) -> usize {
    let mut best = 0;
    for (i, &z) in logits.iter().enumerate().skip(1) {
        if z > logits[best] {
            best = i;
        }
    }
    best
}

/// Roll the policy through `episode` under the given mode.
pub fn rollout<S: Scalar>(
    params: &PolicyParams<S>,
    adapter: Option<&AdapterParams<S>>,
    scene: &Scene<S>,
    episode: &Episode,
    mode: RolloutMode<'_, S>,
    max_steps: usize,
) -> Result<Rollout<S>> {
    let ctx = EpisodeContext::new(params, adapter, scene, &episode.instruction)?;
    let mut node = episode.start;
    let mut prev = PrevAction::None;
    let mut steps: Vec<StepTrace<S>> = Vec::new();
    let mut trajectory = vec![node];

    let step_budget = match mode {
        RolloutMode::TeacherForced => episode.gt_actions.len(),
        RolloutMode::Greedy => max_steps,
        RolloutMode::LogitForced(stored) => stored.steps.len(),
    };

    for step_idx in 0..step_budget {
        let eval = ctx.eval_step(node, prev)?;
        let action = match mode {
            RolloutMode::TeacherForced => {
                let a = episode.gt_actions[step_idx];
                if a >= eval.candidates.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "ground-truth action {} out of range at node {}",
                        a, node
                    )));
                }
                a
            }
            RolloutMode::Greedy => argmax(&eval.logits),
            RolloutMode::LogitForced(stored) => {
                let s = &stored.steps[step_idx];
                if s.logits.len() != eval.candidates.len() {
                    return Err(Error::StaleLogits {
                        step: step_idx,
                        stored: s.logits.len(),
                        actual: eval.candidates.len(),
                    });
                }
                if s.action >= eval.candidates.len() {
                    return Err(Error::StaleLogits {
                        step: step_idx,
                        stored: s.logits.len(),
                        actual: eval.candidates.len(),
                    });
                }
                s.action
            }
        };
        let log_prob = log_softmax(&eval.logits)[action];
        let chosen = eval.candidates[action];
        steps.push(StepTrace {
            node,
            candidates: eval.candidates,
            logits: eval.logits,
            log_prob,
            action,
        });
        match chosen {
            Candidate::Stop => break,
            Candidate::Move(next) => {
                node = next;
                trajectory.push(next);
                prev = PrevAction::Index(action);
            }
        }
    }

    Ok(Rollout { steps, trajectory })
}

impl<S: Scalar> Rollout<S> {
    /// Snapshot this rollout's logits and executed actions for replay.
    pub fn store_logits(&self) -> StoredLogits<S> {
        StoredLogits {
            steps: self
                .steps
                .iter()
                .map(|s| StoredStep {
                    logits: s.logits.clone(),
                    action: s.action,
                })
                .collect(),
        }
    }
}
