//! Adam with bias correction, and the cosine learning-rate schedule.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{ParamSet, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    moments: BTreeMap<String, Moments>,
}

impl Adam {
    pub fn new(beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            t: 0,
            moments: BTreeMap::new(),
        }
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn moments(&self, name: &str) -> Option<&Moments> {
        self.moments.get(name)
    }

    /// One descent update of every named parameter with its gradient.
    pub fn step(
        &mut self,
        params: &mut ParamSet,
        names: &[String],
        grads: &[Tensor],
        lr: f64,
    ) -> Result<()> {
        self.update(params, names, grads, lr, 1.0)
    }

    /// One ascent update (maximizes the objective the gradients came from).
    pub fn ascend(
        &mut self,
        params: &mut ParamSet,
        names: &[String],
        grads: &[Tensor],
        lr: f64,
    ) -> Result<()> {
        self.update(params, names, grads, lr, -1.0)
    }

    fn update(
        &mut self,
        params: &mut ParamSet,
        names: &[String],
        grads: &[Tensor],
        lr: f64,
        sign: f64,
    ) -> Result<()> {
        if names.len() != grads.len() {
            return Err(Error::DimensionMismatch {
                what: "gradient count".into(),
                expected: names.len(),
                found: grads.len(),
            });
        }
        self.t += 1;
        let t = self.t as f64;
        let c1 = 1.0 - libm::pow(self.beta1, t);
        let c2 = 1.0 - libm::pow(self.beta2, t);
        for (name, g) in names.iter().zip(grads) {
            let p = params
                .get(name)
                .ok_or_else(|| Error::MissingParam(name.clone()))?;
            if p.shape() != g.shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam",
                    left: p.shape(),
                    right: g.shape(),
                });
            }
            let st = self.moments.entry(name.clone()).or_insert_with(|| Moments {
                m: vec![0.0; p.len()],
                v: vec![0.0; p.len()],
            });
            let mut values = p.data().to_vec();
            for (k, (x, &gk)) in values.iter_mut().zip(g.data()).enumerate() {
                let gk = sign * gk;
                st.m[k] = self.beta1 * st.m[k] + (1.0 - self.beta1) * gk;
                st.v[k] = self.beta2 * st.v[k] + (1.0 - self.beta2) * gk * gk;
                let mhat = st.m[k] / c1;
                let vhat = st.v[k] / c2;
                *x -= lr * mhat / (libm::sqrt(vhat) + self.eps);
            }
            params.set_values(name, values)?;
        }
        Ok(())
    }
}

/// `lr0 · ½ (1 + cos(π · step / total))`.
pub fn cosine_lr(step: u64, total_steps: u64, lr0: f64) -> f64 {
    if total_steps == 0 {
        return lr0;
    }
    let frac = step.min(total_steps) as f64 / total_steps as f64;
    lr0 * 0.5 * (1.0 + libm::cos(PI * frac))
}
