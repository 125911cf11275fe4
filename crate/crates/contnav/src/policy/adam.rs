//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AdamState<S: Scalar> {
    pub m: Vec<S>,
    pub v: Vec<S>,
    pub t: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![S::zero(); len],
            v: vec![S::zero(); len],
            t: 0,
        }
    }

    /// One Adam update in place. Rejects non-finite gradients with a
    /// diagnostic naming the calling context.
    pub fn step(
        &mut self,
        params: &mut [S],
        grad: &[S],
        hyper: &AdamHyper,
        context: &str,
    ) -> Result<()> {
        if params.len() != grad.len() || params.len() != self.m.len() {
            return Err(Error::DimensionMismatch(format!(
                "optimizer state {} / params {} / grad {}",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                context: context.to_string(),
            });
        }
        self.t += 1;
        let b1 = S::of(hyper.beta1);
        let b2 = S::of(hyper.beta2);
        let one = S::one();
        let lr = S::of(hyper.lr);
        let eps = S::of(hyper.eps);
        let bc1 = one - S::of(hyper.beta1.powi(self.t as i32));
        let bc2 = one - S::of(hyper.beta2.powi(self.t as i32));
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (one - b1) * g;
            self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
