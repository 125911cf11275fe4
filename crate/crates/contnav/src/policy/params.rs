//! Parameter vector layout.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// Previous-action input to a step. The first step of an episode has no
/// previous action; the sentinel contributes a zero vector rather than a
/// table row, which keeps the embedding table at `max_degree + 1` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrevAction {
    None,
    Index(usize),
}

/// Structural dimensions of the policy. The parameter count is a pure
/// function of these fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyShape {
    pub vocab: usize,
    /// Token embedding width E.
    pub embed_dim: usize,
    /// Observation feature dimension F.
    pub feature_dim: usize,
    /// Scorer hidden width H.
    pub hidden_dim: usize,
    /// Previous-action embedding width.
    pub action_dim: usize,
    /// Upper bound on node degree; action indices range 0..=max_degree.
    pub max_degree: usize,
}

impl PolicyShape {
    /// Scorer input width: instruction, node and candidate projections
    /// plus the previous-action embedding.
    pub fn scorer_input_dim(&self) -> usize {
        3 * self.embed_dim + self.action_dim
    }

    // Flat layout: [token_embedding | proj_w | proj_b | stop_feature |
    //               prev_action_embedding | w1 | b1 | w2 | b2]
    pub fn token_embedding_off(&self) -> usize {
        0
    }
    pub fn proj_w_off(&self) -> usize {
        self.vocab * self.embed_dim
    }
    pub fn proj_b_off(&self) -> usize {
        self.proj_w_off() + self.feature_dim * self.embed_dim
    }
    pub fn stop_feature_off(&self) -> usize {
        self.proj_b_off() + self.embed_dim
    }
    pub fn prev_action_off(&self) -> usize {
        self.stop_feature_off() + self.feature_dim
    }
    pub fn w1_off(&self) -> usize {
        self.prev_action_off() + (self.max_degree + 1) * self.action_dim
    }
    pub fn b1_off(&self) -> usize {
        self.w1_off() + self.scorer_input_dim() * self.hidden_dim
    }
    pub fn w2_off(&self) -> usize {
        self.b1_off() + self.hidden_dim
    }
    pub fn b2_off(&self) -> usize {
        self.w2_off() + self.hidden_dim
    }
    pub fn param_count(&self) -> usize {
        self.b2_off() + 1
    }
}

/// The policy's full parameter set, stored flat so the optimizer and the
/// regularizers can treat it as one vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PolicyParams<S: Scalar> {
    pub shape: PolicyShape,
    theta: Vec<S>,
}

impl<S: Scalar> PolicyParams<S> {
    pub fn zeros(shape: PolicyShape) -> Self {
        PolicyParams {
            shape,
            theta: vec![S::zero(); shape.param_count()],
        }
    }

    /// Seeded init: small Gaussians everywhere, zero biases, and a
    /// paired-unit matching skeleton in the scorer.
    ///
    /// Hidden units are seeded in +/- pairs that read the same coordinate
    /// of the instruction segment and of the candidate segment; under the
    /// swish nonlinearity such a pair approximates the product of the two
    /// coordinates, so the scorer starts with a working correlation
    /// detector between instruction content and candidate features and
    /// training only has to align the two representations. Without it
    /// the scorer spends most of the per-domain step budget rediscovering
    /// the product structure.
    pub fn init(shape: PolicyShape, seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::PolicyInit, &[]);
        let mut p = Self::zeros(shape);
        let scale = 0.2;
        for i in 0..shape.param_count() {
            let x: f64 = rng.sample(StandardNormal);
            p.theta[i] = S::of(scale * x);
        }
        // Biases start at zero.
        for i in shape.proj_b_off()..shape.proj_b_off() + shape.embed_dim {
            p.theta[i] = S::zero();
        }
        for i in shape.b1_off()..shape.b1_off() + shape.hidden_dim {
            p.theta[i] = S::zero();
        }
        p.theta[shape.b2_off()] = S::zero();

        // Matching skeleton: pair 2k reads (instr_k + cand_k), pair 2k+1
        // reads (instr_k - cand_k); their weighted difference in the
        // output layer approximates instr_k * cand_k.
        let gamma = 0.8;
        let delta = 0.6;
        let e = shape.embed_dim;
        let h = shape.hidden_dim;
        let pairs = (h / 2).min(e);
        let w1 = shape.w1_off();
        let w2 = shape.w2_off();
        for k in 0..pairs {
            let instr_row = k; // coordinate k of the instruction segment
            let cand_row = 2 * e + k; // coordinate k of the candidate segment
            p.theta[w1 + instr_row * h + 2 * k] += S::of(gamma);
            p.theta[w1 + cand_row * h + 2 * k] += S::of(gamma);
            p.theta[w1 + instr_row * h + 2 * k + 1] += S::of(gamma);
            p.theta[w1 + cand_row * h + 2 * k + 1] += S::of(-gamma);
            p.theta[w2 + 2 * k] += S::of(delta);
            p.theta[w2 + 2 * k + 1] += S::of(-delta);
        }
        p
    }

    /// Exact flatten; `from_flat` is its exact inverse.
    pub fn flatten(&self) -> Vec<S> {
        self.theta.clone()
    }

    pub fn from_flat(shape: PolicyShape, theta: Vec<S>) -> Result<Self> {
        if theta.len() != shape.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "parameter vector has {} entries, shape requires {}",
                theta.len(),
                shape.param_count()
            )));
        }
        Ok(PolicyParams { shape, theta })
    }

    pub fn theta(&self) -> &[S] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [S] {
        &mut self.theta
    }

    pub fn token_embedding(&self, token: u32) -> Result<&[S]> {
        let t = token as usize;
        if t >= self.shape.vocab {
            return Err(Error::DimensionMismatch(format!(
                "token {} outside vocabulary of {}",
                t, self.shape.vocab
            )));
        }
        let e = self.shape.embed_dim;
        let off = self.shape.token_embedding_off() + t * e;
        Ok(&self.theta[off..off + e])
    }

    pub fn proj_w(&self) -> &[S] {
        let off = self.shape.proj_w_off();
        &self.theta[off..off + self.shape.feature_dim * self.shape.embed_dim]
    }

    pub fn proj_b(&self) -> &[S] {
        let off = self.shape.proj_b_off();
        &self.theta[off..off + self.shape.embed_dim]
    }

    pub fn stop_feature(&self) -> &[S] {
        let off = self.shape.stop_feature_off();
        &self.theta[off..off + self.shape.feature_dim]
    }

    pub fn prev_action_embedding(&self, index: usize) -> Result<&[S]> {
        if index > self.shape.max_degree {
            return Err(Error::DimensionMismatch(format!(
                "previous action index {} exceeds max degree {}",
                index, self.shape.max_degree
            )));
        }
        let a = self.shape.action_dim;
        let off = self.shape.prev_action_off() + index * a;
        Ok(&self.theta[off..off + a])
    }

    pub fn w1(&self) -> &[S] {
        let off = self.shape.w1_off();
        &self.theta[off..off + self.shape.scorer_input_dim() * self.shape.hidden_dim]
    }

    pub fn b1(&self) -> &[S] {
        let off = self.shape.b1_off();
        &self.theta[off..off + self.shape.hidden_dim]
    }

    pub fn w2(&self) -> &[S] {
        let off = self.shape.w2_off();
        &self.theta[off..off + self.shape.hidden_dim]
    }

    pub fn b2(&self) -> S {
        self.theta[self.shape.b2_off()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape() -> PolicyShape {
        PolicyShape {
            vocab: 40,
            embed_dim: 4,
            feature_dim: 3,
            hidden_dim: 5,
            action_dim: 2,
            max_degree: 6,
        }
    }

    #[test]
    fn param_count_matches_layout() {
        let s = shape();
        let expected = 40 * 4 + 3 * 4 + 4 + 3 + 7 * 2 + (12 + 2) * 5 + 5 + 5 + 1;
        assert_eq!(s.param_count(), expected);
    }

    #[test]
    fn flatten_round_trips_exactly() {
        let p = PolicyParams::<f64>::init(shape(), 3);
        let flat = p.flatten();
        let q = PolicyParams::from_flat(shape(), flat).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn from_flat_rejects_wrong_length() {
        assert!(PolicyParams::<f64>::from_flat(shape(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn init_is_deterministic() {
        let a = PolicyParams::<f64>::init(shape(), 11);
        let b = PolicyParams::<f64>::init(shape(), 11);
        assert_eq!(a, b);
        let c = PolicyParams::<f64>::init(shape(), 12);
        assert_ne!(a, c);
    }
}
