//! A small differentiable sequence-to-action navigation policy.
//!
//! The model scores each movement candidate (neighbors of the current
//! node, then STOP) with a two-layer MLP over the mean-pooled instruction
//! encoding, the projected features of the current node and of the
//! candidate, and an embedding of the previous action. Gradients are
//! exact and hand-derived (reverse-mode over the fixed-shape computation);
//! there is no autodiff dependency.

mod adam;
mod adapter;
mod forward;
mod loss;
mod params;
mod rollout;

pub use adam::{AdamHyper, AdamState};
pub use adapter::AdapterParams;
pub use forward::{instruction_encoding, log_softmax, softmax, EpisodeContext, StepEval};
pub use loss::{esr_loss_grad, imitation_loss_grad, l2_anchor_loss_grad};
pub use params::{PolicyParams, PolicyShape, PrevAction};
pub use rollout::{rollout, Rollout, RolloutMode, StepTrace, StoredLogits, StoredStep};
