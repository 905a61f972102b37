use std::collections::BTreeMap;

use super::tape::Gradients;
use super::tensor::Tensor;
use crate::error::{shape_err, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer state. Moment buffers are created lazily (zeroed) the
/// first time a parameter name is seen.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    first: BTreeMap<String, Tensor>,
    second: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn set_learning_rate(&mut self, rate: f64) {
        self.config.learning_rate = rate;
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, name: &str) -> Option<&Tensor> {
        self.first.get(name)
    }

    pub fn second_moment(&self, name: &str) -> Option<&Tensor> {
        self.second.get(name)
    }

    /// One bias-corrected Adam update. Parameters without a gradient entry are
    /// treated as having a zero gradient.
    pub fn step(&mut self, params: Vec<(String, &mut Tensor)>, grads: &Gradients) -> Result<()> {
        for (name, p) in &params {
            if let Some(g) = grads.get(name) {
                if g.shape() != p.shape() {
                    return Err(shape_err("adam_step", p.shape(), g.shape()));
                }
            }
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (name, p) in params {
            let m = self
                .first
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(p.shape()));
            let v = self
                .second
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(p.shape()));
            let Some(g) = grads.get(&name) else {
                // zero gradient: decay the moments, then apply the (possibly
                // nonzero) momentum update
                for ((pv, mv), vv) in p.data_mut().iter_mut().zip(m.data_mut()).zip(v.data_mut()) {
                    *mv *= beta1;
                    *vv *= beta2;
                    *pv -= learning_rate * (*mv / c1) / ((*vv / c2).sqrt() + epsilon);
                }
                continue;
            };
            for (((pv, mv), vv), gv) in p
                .data_mut()
                .iter_mut()
                .zip(m.data_mut())
                .zip(v.data_mut())
                .zip(g.data())
            {
                *mv = beta1 * *mv + (1.0 - beta1) * gv;
                *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                *pv -= learning_rate * (*mv / c1) / ((*vv / c2).sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
