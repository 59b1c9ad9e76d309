//! Layers whose parameters live in a [`ParamStore`].

use crate::graph::{Graph, Var, BATCH_NORM_EPS};
use crate::param::{ParamId, ParamStore};
use crate::rng::RngState;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Linear {
    /// Glorot-uniform weights, zero bias. The weight is stored `[in, out]`.
    pub fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut RngState) -> Self {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = (0..fan_in * fan_out)
            .map(|_| rng.uniform_range(-bound, bound))
            .collect();
        let weight = store.add(
            format!("{name}.weight"),
            Tensor::matrix(fan_in, fan_out, w).unwrap(),
        );
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(1, fan_out));
        Self {
            weight,
            bias,
            fan_in,
            fan_out,
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Var {
        let w = g.param(store, self.weight);
        let b = g.param(store, self.bias);
        g.affine(x, w, b)
    }
}

/// Per-feature normalization over the rows of a batch, with running
/// statistics for evaluation.
#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    /// Weight kept on the old running statistic per update.
    pub momentum: f64,
}

impl BatchNorm {
    pub fn new(store: &mut ParamStore, name: &str, width: usize) -> Self {
        Self {
            gamma: store.add(format!("{name}.gamma"), Tensor::full(1, width, 1.0)),
            beta: store.add(format!("{name}.beta"), Tensor::zeros(1, width)),
            running_mean: store.add_buffer(format!("{name}.running_mean"), Tensor::zeros(1, width)),
            running_var: store.add_buffer(format!("{name}.running_var"), Tensor::full(1, width, 1.0)),
            momentum: 0.9,
        }
    }

    /// Training mode: normalizes with batch statistics and folds them into
    /// the running averages.
    pub fn forward_train(&self, g: &mut Graph, store: &mut ParamStore, x: Var) -> Var {
        let xhat = g.batch_norm(x, BATCH_NORM_EPS);
        let (mean, var) = g.batch_stats(xhat).expect("batch_norm node");
        let m = self.momentum;
        for (r, b) in store.value_mut(self.running_mean).data_mut().iter_mut().zip(mean) {
            *r = m * *r + (1.0 - m) * b;
        }
        for (r, b) in store.value_mut(self.running_var).data_mut().iter_mut().zip(var) {
            *r = m * *r + (1.0 - m) * b;
        }
        self.scale_shift(g, store, xhat)
    }

    /// Evaluation mode: normalizes with the running statistics.
    pub fn forward_eval(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Var {
        let mean = store.value(self.running_mean).data();
        let inv_std: Vec<f64> = store
            .value(self.running_var)
            .data()
            .iter()
            .map(|v| 1.0 / (v + BATCH_NORM_EPS).sqrt())
            .collect();
        let shift: Vec<f64> = mean.iter().zip(&inv_std).map(|(m, s)| -m * s).collect();
        let scale = g.constant(Tensor::row(inv_std));
        let shift = g.constant(Tensor::row(shift));
        let h = g.mul_row(x, scale);
        let xhat = g.add_row(h, shift);
        self.scale_shift(g, store, xhat)
    }

    pub fn forward(&self, g: &mut Graph, store: &mut ParamStore, x: Var, train: bool) -> Var {
        if train {
            self.forward_train(g, store, x)
        } else {
            self.forward_eval(g, store, x)
        }
    }

    fn scale_shift(&self, g: &mut Graph, store: &ParamStore, xhat: Var) -> Var {
        let gamma = g.param(store, self.gamma);
        let beta = g.param(store, self.beta);
        let h = g.mul_row(xhat, gamma);
        g.add_row(h, beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_stats_follow_momentum() {
        let mut store = ParamStore::new();
        let bn = BatchNorm::new(&mut store, "bn", 2);
        let mut g = Graph::new();
        let x = g.constant(Tensor::matrix(2, 2, vec![1.0, 0.0, 3.0, 0.0]).unwrap());
        bn.forward_train(&mut g, &mut store, x);
        let rm = store.value(bn.running_mean).data();
        assert!((rm[0] - 0.2).abs() < 1e-15 && rm[1] == 0.0);
        let rv = store.value(bn.running_var).data();
        assert!((rv[0] - (0.9 + 0.1 * 1.0)).abs() < 1e-15);
        assert!((rv[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn eval_mode_identical_rows_give_identical_outputs() {
        let mut store = ParamStore::new();
        let mut rng = RngState::new(1);
        let lin = Linear::new(&mut store, "l", 3, 2, &mut rng);
        let bn = BatchNorm::new(&mut store, "bn", 2);
        let mut g = Graph::new();
        let x = g.constant(Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap());
        let h = lin.forward(&mut g, &store, x);
        let y = bn.forward(&mut g, &mut store, h, false);
        let out = g.value(y);
        assert_eq!(out.row_slice(0), out.row_slice(1));
    }
}
