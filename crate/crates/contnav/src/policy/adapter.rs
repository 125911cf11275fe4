//! Additive low-rank adapters on the scorer input.
//!
//! An adapter rewrites the scorer input as `x + up(down(x))`. The down
//! projection starts small-random and the up projection starts at zero,
//! so a fresh adapter is exactly the identity.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AdapterParams<S: Scalar> {
    pub input_dim: usize,
    pub rank: usize,
    /// Down projection, row-major `[input_dim][rank]`.
    pub down: Vec<S>,
    /// Up projection, row-major `[rank][input_dim]`.
    pub up: Vec<S>,
}

impl<S: Scalar> AdapterParams<S> {
    pub fn init(input_dim: usize, rank: usize, seed: u64, index: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::AdapterInit, &[index]);
        let down = (0..input_dim * rank)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                S::of(0.1 * x)
            })
            .collect();
        AdapterParams {
            input_dim,
            rank,
            down,
            up: vec![S::zero(); rank * input_dim],
        }
    }

    pub fn param_count(&self) -> usize {
        2 * self.input_dim * self.rank
    }

    /// `x + up(down(x))`; returns the bottleneck activations and the
    /// adapted input (both needed by the backward pass).
    pub fn apply(&self, x: &[S]) -> (Vec<S>, Vec<S>) {
        debug_assert_eq!(x.len(), self.input_dim);
        let mut t = vec![S::zero(); self.rank];
        for (d, &xd) in x.iter().enumerate() {
            let row = &self.down[d * self.rank..(d + 1) * self.rank];
            for (j, &w) in row.iter().enumerate() {
                t[j] += xd * w;
            }
        }
        let mut out = x.to_vec();
        for (j, &tj) in t.iter().enumerate() {
            let row = &self.up[j * self.input_dim..(j + 1) * self.input_dim];
            for (d, &w) in row.iter().enumerate() {
                out[d] += tj * w;
            }
        }
        (t, out)
    }

    /// Backward through `apply`. Accumulates adapter gradients into
    /// `d_down`/`d_up` (when provided) and returns dL/dx.
    pub fn backward(
        &self,
        x: &[S],
        t: &[S],
        d_out: &[S],
        mut d_down: Option<&mut [S]>,
        mut d_up: Option<&mut [S]>,
    ) -> Vec<S> {
        let mut d_t = vec![S::zero(); self.rank];
        for (j, dt) in d_t.iter_mut().enumerate() {
            let row = &self.up[j * self.input_dim..(j + 1) * self.input_dim];
            for (d, &w) in row.iter().enumerate() {
                *dt += d_out[d] * w;
            }
        }
        if let Some(du) = d_up.as_deref_mut() {
            for (j, &tj) in t.iter().enumerate() {
                let row = &mut du[j * self.input_dim..(j + 1) * self.input_dim];
                for (d, slot) in row.iter_mut().enumerate() {
                    *slot += tj * d_out[d];
                }
            }
        }
        if let Some(dd) = d_down.as_deref_mut() {
            for (d, &xd) in x.iter().enumerate() {
                let row = &mut dd[d * self.rank..(d + 1) * self.rank];
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot += xd * d_t[j];
                }
            }
        }
        let mut d_x = d_out.to_vec();
        for (d, dx) in d_x.iter_mut().enumerate() {
            for (j, &dt) in d_t.iter().enumerate() {
                *dx += self.down[d * self.rank + j] * dt;
            }
        }
        d_x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_adapter_is_identity() {
        let a = AdapterParams::<f64>::init(6, 2, 1, 0);
        let x = vec![1.0, -2.0, 3.0, 0.5, 0.0, -1.0];
        let (_, out) = a.apply(&x);
        assert_eq!(out, x);
    }

    #[test]
    fn apply_matches_dense_oracle() {
        let mut a = AdapterParams::<f64>::init(3, 2, 1, 0);
        a.up = vec![0.5, -1.0, 2.0, 0.25, 0.0, -0.5];
        let x = vec![1.0, 2.0, -1.0];
        // Dense recomputation of t and out.
        let t0 = x[0] * a.down[0] + x[1] * a.down[2] + x[2] * a.down[4];
        let t1 = x[0] * a.down[1] + x[1] * a.down[3] + x[2] * a.down[5];
        let expect = [
            x[0] + t0 * a.up[0] + t1 * a.up[3],
            x[1] + t0 * a.up[1] + t1 * a.up[4],
            x[2] + t0 * a.up[2] + t1 * a.up[5],
        ];
        let (t, out) = a.apply(&x);
        assert_eq!(t, vec![t0, t1]);
        assert_eq!(out.as_slice(), expect.as_slice());
    }
}
