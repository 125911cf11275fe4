//! Action perplexity: the model's self-assessed difficulty of an episode.

use crate::error::Result;
use crate::policy::{rollout, AdapterParams, PolicyParams, RolloutMode};
use crate::scalar::Scalar;
use crate::sim::{Episode, Scene};

/// Log-probabilities are clamped here before averaging so an underflowed
/// step cannot produce an infinite perplexity. Ordering above the clamp
/// is unaffected.
pub const LOG_PROB_CLAMP: f64 = -50.0;

/// `exp(-(1/N) * sum(log p_i))` over clamped per-step log-probabilities.
pub fn ap_from_log_probs<S: Scalar>(log_probs: &[S]) -> S {
    assert!(!log_probs.is_empty(), "perplexity of an empty episode");
    let clamp = S::of(LOG_PROB_CLAMP);
    let total = crate::scalar::sum(log_probs.iter().map(|&lp| lp.max(clamp)));
    let mean = total / S::of(log_probs.len() as f64);
    (-mean).exp()
}

/// Perplexity of the demonstrated actions under the current model
/// (teacher-forced rollout over the ground-truth action sequence).
pub fn action_perplexity<S: Scalar>(
    params: &PolicyParams<S>,
    adapter: Option<&AdapterParams<S>>,
    scene: &Scene<S>,
    episode: &Episode,
) -> Result<S> {
    let out = rollout(
        params,
        adapter,
        scene,
        episode,
        RolloutMode::TeacherForced,
        episode.num_steps(),
    )?;
    let log_probs: Vec<S> = out.steps.iter().map(|s| s.log_prob).collect();
    Ok(ap_from_log_probs(&log_probs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_model_has_unit_perplexity() {
        // Probability 1 at every step: log-probs are all zero.
        let ap = ap_from_log_probs(&[0.0f64, 0.0, 0.0]);
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn uniform_over_four_candidates_gives_four() {
        let lp = (0.25f64).ln();
        let ap = ap_from_log_probs(&[lp, lp]);
        assert!((ap - 4.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_mean_identity() {
        // Probabilities 0.5, 0.25, 0.125: AP = (2*4*8)^(1/3) = 4.
        let lp: Vec<f64> = [0.5f64, 0.25, 0.125].iter().map(|p| p.ln()).collect();
        let ap = ap_from_log_probs(&lp);
        assert!((ap - 4.0).abs() < 1e-12);
    }

    #[test]
    fn clamp_prevents_overflow() {
        let ap = ap_from_log_probs(&[-1e9f64]);
        assert!((ap - (50.0f64).exp()).abs() < 1e-3);
        assert!(ap.is_finite());
    }
}
