use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TensorError};
use crate::param::ParamStore;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Moments are allocated on the first step.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of `params` along `grads`.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(invalid(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            g.check_shape(p.shape())?;
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| Tensor::zeros_like(p)).collect();
            self.second = self.first.clone();
        } else {
            if self.first.len() != params.len() {
                return Err(invalid(format!(
                    "optimizer tracks {} parameters, got {}",
                    self.first.len(),
                    params.len()
                )));
            }
            for (m, p) in self.first.iter().zip(params.iter()) {
                if m.shape() != p.shape() {
                    return Err(TensorError::ShapeMismatch {
                        expected: m.shape().to_vec(),
                        actual: p.shape().to_vec(),
                    });
                }
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            for (((w, &gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }

    /// Steps every trainable parameter of `store` along its stored gradient.
    pub fn step_store(&mut self, store: &mut ParamStore) -> Result<()> {
        let (mut values, grads): (Vec<&mut Tensor>, Vec<&Tensor>) = store
            .params_mut()
            .iter_mut()
            .filter(|p| p.trainable)
            .map(|p| (&mut p.value, &p.grad))
            .unzip();
        self.step(&mut values, &grads)
    }
}
