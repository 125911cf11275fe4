//! Forward pass and hand-derived reverse-mode gradients.
//!
//! Per-candidate computation at a node:
//!
//! ```text
//! x = [instr_enc ; proj(feat(node)) ; proj(feat(cand)) ; prev_action_emb]
//! h = swish(W1ᵀ x + b1)
//! z = W2 · h + b2
//! ```
//!
//! where `proj(f) = fᵀ W_p + b_p`, the instruction encoding is the mean
//! of its token embeddings, STOP substitutes a learned feature vector for
//! the candidate features, and the first step's previous-action slot is a
//! zero vector. An optional low-rank adapter rewrites `x` before the MLP.
//!
//! The hidden activation is swish (`x * sigmoid(x)`) rather than an odd
//! function: scoring a candidate against the instruction is a matching
//! problem, and swish's even second-order component lets a narrow hidden
//! layer pick up products between input segments.

use crate::error::{Error, Result};
use crate::policy::adapter::AdapterParams;
use crate::policy::params::{PolicyParams, PrevAction};
use crate::scalar::Scalar;
use crate::sim::{Candidate, Scene};

/// Mean of the token embeddings of `instruction`.
pub fn instruction_encoding<S: Scalar>(
    params: &PolicyParams<S>,
    instruction: &[u32],
) -> Result<Vec<S>> {
    let e = params.shape.embed_dim;
    let mut enc = vec![S::zero(); e];
    for &token in instruction {
        for (slot, &v) in enc.iter_mut().zip(params.token_embedding(token)?) {
            *slot += v;
        }
    }
    if !instruction.is_empty() {
        let inv = S::one() / S::of(instruction.len() as f64);
        for slot in &mut enc {
            *slot *= inv;
        }
    }
    Ok(enc)
}

/// Numerically stable softmax.
pub fn softmax<S: Scalar>(z: &[S]) -> Vec<S> {
    let max = z.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = z.iter().map(|&v| (v - max).exp()).collect();
    let total = crate::scalar::sum(exps.iter().copied());
    exps.into_iter().map(|v| v / total).collect()
}

/// Numerically stable log-softmax.
pub fn log_softmax<S: Scalar>(z: &[S]) -> Vec<S> {
    let max = z.iter().copied().fold(S::neg_infinity(), S::max);
    let lse = crate::scalar::sum(z.iter().map(|&v| (v - max).exp())).ln() + max;
    z.iter().map(|&v| v - lse).collect()
}

fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

fn swish<S: Scalar>(x: S) -> S {
    x * sigmoid(x)
}

fn swish_prime<S: Scalar>(x: S) -> S {
    let s = sigmoid(x);
    s * (S::one() + x * (S::one() - s))
}

/// Everything the backward pass needs about one evaluated step.
#[derive(Debug, Clone)]
pub struct StepEval<S: Scalar> {
    pub node: u32,
    pub prev_action: PrevAction,
    pub candidates: Vec<Candidate>,
    pub logits: Vec<S>,
    /// Per-candidate scorer inputs (before any adapter).
    inputs: Vec<Vec<S>>,
    /// Per-candidate adapter intermediates `(bottleneck, adapted input)`.
    adapted: Option<Vec<(Vec<S>, Vec<S>)>>,
    /// Per-candidate hidden pre-activations.
    hidden_pre: Vec<Vec<S>>,
    /// Per-candidate hidden activations (post-swish).
    hidden: Vec<Vec<S>>,
}

/// Shared per-episode state: the scene, the instruction and its encoding.
pub struct EpisodeContext<'a, S: Scalar> {
    pub params: &'a PolicyParams<S>,
    pub adapter: Option<&'a AdapterParams<S>>,
    pub scene: &'a Scene<S>,
    pub instruction: &'a [u32],
    pub instr_enc: Vec<S>,
}

impl<'a, S: Scalar> EpisodeContext<'a, S> {
    pub fn new(
        params: &'a PolicyParams<S>,
        adapter: Option<&'a AdapterParams<S>>,
        scene: &'a Scene<S>,
        instruction: &'a [u32],
    ) -> Result<Self> {
        if scene.feature_dim() != params.shape.feature_dim {
            return Err(Error::DimensionMismatch(format!(
                "scene features have dim {}, policy expects {}",
                scene.feature_dim(),
                params.shape.feature_dim
            )));
        }
        if let Some(a) = adapter {
            if a.input_dim != params.shape.scorer_input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "adapter input dim {} does not match scorer input {}",
                    a.input_dim,
                    params.shape.scorer_input_dim()
                )));
            }
        }
        let instr_enc = instruction_encoding(params, instruction)?;
        Ok(EpisodeContext {
            params,
            adapter,
            scene,
            instruction,
            instr_enc,
        })
    }

    fn project(&self, feat: &[S]) -> Vec<S> {
        let shape = &self.params.shape;
        let w = self.params.proj_w();
        let mut out = self.params.proj_b().to_vec();
        for (f, &x) in feat.iter().enumerate() {
            let row = &w[f * shape.embed_dim..(f + 1) * shape.embed_dim];
            for (o, &wv) in out.iter_mut().zip(row) {
                *o += x * wv;
            }
        }
        out
    }

    /// Score every candidate at `node`. Returns logits plus the cached
    /// intermediates for `backward_step`.
    pub fn eval_step(&self, node: u32, prev_action: PrevAction) -> Result<StepEval<S>> {
        let shape = &self.params.shape;
        let candidates = self.scene.candidate_actions(node)?;
        if candidates.len() > shape.max_degree + 1 {
            return Err(Error::DimensionMismatch(format!(
                "node {} has {} candidates, max degree is {}",
                node,
                candidates.len() - 1,
                shape.max_degree
            )));
        }
        let node_proj = self.project(&self.scene.features[node as usize]);
        let prev_emb: Vec<S> = match prev_action {
            PrevAction::None => vec![S::zero(); shape.action_dim],
            PrevAction::Index(i) => self.params.prev_action_embedding(i)?.to_vec(),
        };

        let d_in = shape.scorer_input_dim();
        let mut inputs = Vec::with_capacity(candidates.len());
        let mut adapted = self.adapter.map(|_| Vec::with_capacity(candidates.len()));
        let mut hidden_pre = Vec::with_capacity(candidates.len());
        let mut hidden = Vec::with_capacity(candidates.len());
        let mut logits = Vec::with_capacity(candidates.len());
        for &cand in &candidates {
            let cand_proj = match cand {
                Candidate::Move(n) => self.project(&self.scene.features[n as usize]),
                Candidate::Stop => self.project(self.params.stop_feature()),
            };
            let mut x = Vec::with_capacity(d_in);
            x.extend_from_slice(&self.instr_enc);
            x.extend_from_slice(&node_proj);
            x.extend_from_slice(&cand_proj);
            x.extend_from_slice(&prev_emb);

            let adapter_cache = self.adapter.map(|a| a.apply(&x));
            let mlp_in: &[S] = adapter_cache.as_ref().map_or(&x[..], |(_, xp)| xp);

            let w1 = self.params.w1();
            let mut pre = self.params.b1().to_vec();
            for (d, &xv) in mlp_in.iter().enumerate() {
                let row = &w1[d * shape.hidden_dim..(d + 1) * shape.hidden_dim];
                for (hv, &wv) in pre.iter_mut().zip(row) {
                    *hv += xv * wv;
                }
            }
            let h: Vec<S> = pre.iter().map(|&v| swish(v)).collect();
            let z = crate::scalar::dot(&h, self.params.w2()) + self.params.b2();

            if let Some(cache) = adapter_cache {
                adapted.as_mut().expect("adapter cache").push(cache);
            }
            inputs.push(x);
            hidden_pre.push(pre);
            hidden.push(h);
            logits.push(z);
        }
        Ok(StepEval {
            node,
            prev_action,
            candidates,
            logits,
            inputs,
            adapted,
            hidden_pre,
            hidden,
        })
    }

    /// Accumulate gradients for one step given dL/dz per candidate.
    ///
    /// Parameter gradients go into `d_theta` (same layout as the flat
    /// parameter vector); the instruction-encoding gradient accumulates
    /// into `d_instr_enc` and must be distributed to token embeddings
    /// once per episode via [`finish_backward`]. When an adapter is
    /// active its gradients go into `d_adapter` if provided; pass
    /// `freeze_base` to skip base-parameter accumulation (adapter-only
    /// training).
    #[allow(clippy::too_many_arguments)]
    pub fn backward_step(
        &self,
        eval: &StepEval<S>,
        dldz: &[S],
        d_theta: &mut [S],
        d_instr_enc: &mut [S],
        d_adapter: Option<(&mut [S], &mut [S])>,
        freeze_base: bool,
    ) {
        let shape = &self.params.shape;
        let e = shape.embed_dim;
        let d_in = shape.scorer_input_dim();
        let hdim = shape.hidden_dim;
        let w1 = self.params.w1();
        let w2 = self.params.w2();

        let mut d_adapter = d_adapter;

        for (c, &dz) in dldz.iter().enumerate() {
            if dz == S::zero() {
                continue;
            }
            let h = &eval.hidden[c];
            let pre = &eval.hidden_pre[c];
            let x = &eval.inputs[c];
            let mlp_in: &[S] = match &eval.adapted {
                Some(cache) => &cache[c].1,
                None => x,
            };

            // z = w2·h + b2
            if !freeze_base {
                let w2_off = shape.w2_off();
                for (j, &hv) in h.iter().enumerate() {
                    d_theta[w2_off + j] += dz * hv;
                }
                d_theta[shape.b2_off()] += dz;
            }

            // h = swish(pre)
            let mut dpre = vec![S::zero(); hdim];
            for (j, dp) in dpre.iter_mut().enumerate() {
                *dp = dz * w2[j] * swish_prime(pre[j]);
            }

            // pre = W1ᵀ mlp_in + b1
            let mut d_x_post = vec![S::zero(); d_in];
            if !freeze_base {
                let b1_off = shape.b1_off();
                for (j, &dp) in dpre.iter().enumerate() {
                    d_theta[b1_off + j] += dp;
                }
                let w1_off = shape.w1_off();
                for (d, &xv) in mlp_in.iter().enumerate() {
                    let row = w1_off + d * hdim;
                    for (j, &dp) in dpre.iter().enumerate() {
                        d_theta[row + j] += xv * dp;
                    }
                }
            }
            for (d, dxv) in d_x_post.iter_mut().enumerate() {
                let row = &w1[d * hdim..(d + 1) * hdim];
                let mut acc = S::zero();
                for (j, &wv) in row.iter().enumerate() {
                    acc += wv * dpre[j];
                }
                *dxv = acc;
            }

            // Through the adapter (if any) back to the raw input x.
            let d_x: Vec<S> = match (&eval.adapted, self.adapter) {
                (Some(cache), Some(a)) => {
                    let (t, _) = &cache[c];
                    let (dd, du) = match d_adapter.as_mut() {
                        Some((dd, du)) => (Some(&mut **dd), Some(&mut **du)),
                        None => (None, None),
                    };
                    a.backward(x, t, &d_x_post, dd, du)
                }
                _ => d_x_post,
            };

            if freeze_base {
                continue;
            }

            // Split d_x into the four input segments.
            let (d_instr, rest) = d_x.split_at(e);
            let (d_node_proj, rest) = rest.split_at(e);
            let (d_cand_proj, d_prev) = rest.split_at(e);

            for (slot, &v) in d_instr_enc.iter_mut().zip(d_instr) {
                *slot += v;
            }
            self.backward_projection(&self.scene.features[eval.node as usize], d_node_proj, d_theta);
            match eval.candidates[c] {
                Candidate::Move(n) => {
                    self.backward_projection(&self.scene.features[n as usize], d_cand_proj, d_theta);
                }
                Candidate::Stop => {
                    let stop = self.params.stop_feature().to_vec();
                    self.backward_projection(&stop, d_cand_proj, d_theta);
                    // Gradient also flows into the stop feature itself.
                    let w = self.params.proj_w();
                    let stop_off = shape.stop_feature_off();
                    for f in 0..shape.feature_dim {
                        let row = &w[f * e..(f + 1) * e];
                        let mut acc = S::zero();
                        for (j, &wv) in row.iter().enumerate() {
                            acc += wv * d_cand_proj[j];
                        }
                        d_theta[stop_off + f] += acc;
                    }
                }
            }
            if let PrevAction::Index(i) = eval.prev_action {
                let off = shape.prev_action_off() + i * shape.action_dim;
                for (j, &v) in d_prev.iter().enumerate() {
                    d_theta[off + j] += v;
                }
            }
        }
    }

    /// proj(f) = fᵀ W_p + b_p; accumulate into W_p and b_p.
    fn backward_projection(&self, feat: &[S], d_out: &[S], d_theta: &mut [S]) {
        let shape = &self.params.shape;
        let e = shape.embed_dim;
        let w_off = shape.proj_w_off();
        for (f, &fv) in feat.iter().enumerate() {
            if fv == S::zero() {
                continue;
            }
            let row = w_off + f * e;
            for (j, &dv) in d_out.iter().enumerate() {
                d_theta[row + j] += fv * dv;
            }
        }
        let b_off = shape.proj_b_off();
        for (j, &dv) in d_out.iter().enumerate() {
            d_theta[b_off + j] += dv;
        }
    }

    /// Distribute the accumulated instruction-encoding gradient to the
    /// token embeddings (call once per episode, after all steps).
    pub fn finish_backward(&self, d_instr_enc: &[S], d_theta: &mut [S]) {
        if self.instruction.is_empty() {
            return;
        }
        let shape = &self.params.shape;
        let e = shape.embed_dim;
        let inv = S::one() / S::of(self.instruction.len() as f64);
        for &token in self.instruction {
            let off = shape.token_embedding_off() + token as usize * e;
            for (j, &v) in d_instr_enc.iter().enumerate() {
                d_theta[off + j] += v * inv;
            }
        }
    }
}
