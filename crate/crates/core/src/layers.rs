//! Network building blocks shared by the ranker and the selectors.

use fsltr_tensor::nn::{BatchNorm, Linear};
use fsltr_tensor::{Graph, ParamStore, RngState, Tensor, Var};

use crate::error::{invalid, Result};

/// Parameter access for one forward pass. Training mode may update
/// batch-norm running statistics; evaluation mode only reads.
pub enum Mode<'a> {
    Train(&'a mut ParamStore),
    Eval(&'a ParamStore),
}

impl Mode<'_> {
    pub fn store(&self) -> &ParamStore {
        match self {
            Mode::Train(s) => s,
            Mode::Eval(s) => s,
        }
    }

    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }

    pub fn linear(&self, g: &mut Graph, layer: &Linear, x: Var) -> Var {
        layer.forward(g, self.store(), x)
    }

    pub fn batch_norm(&mut self, g: &mut Graph, bn: &BatchNorm, x: Var) -> Var {
        match self {
            Mode::Train(s) => bn.forward_train(g, s, x),
            Mode::Eval(s) => bn.forward_eval(g, s, x),
        }
    }
}

/// `[Linear → BatchNorm → tanh]*` followed by a linear head.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub hidden: Vec<(Linear, BatchNorm)>,
    pub head: Linear,
}

impl Mlp {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        widths: &[usize],
        output: usize,
        rng: &mut RngState,
    ) -> Mlp {
        let mut fan_in = input;
        let mut hidden = Vec::with_capacity(widths.len());
        for (i, &w) in widths.iter().enumerate() {
            let lin = Linear::new(store, &format!("{name}.fc{i}"), fan_in, w, rng);
            let bn = BatchNorm::new(store, &format!("{name}.bn{i}"), w);
            hidden.push((lin, bn));
            fan_in = w;
        }
        let head = Linear::new(store, &format!("{name}.head"), fan_in, output, rng);
        Mlp { hidden, head }
    }

    pub fn input_width(&self) -> usize {
        self.first_layer().fan_in
    }

    pub fn output_width(&self) -> usize {
        self.head.fan_out
    }

    pub fn first_layer(&self) -> &Linear {
        self.hidden.first().map_or(&self.head, |(l, _)| l)
    }

    pub fn forward(&self, g: &mut Graph, mode: &mut Mode, x: Var) -> Var {
        let mut h = x;
        for (lin, bn) in &self.hidden {
            h = mode.linear(g, lin, h);
            h = mode.batch_norm(g, bn, h);
            h = g.tanh(h);
        }
        mode.linear(g, &self.head, h)
    }
}

pub(crate) fn check_width(features: &Tensor, expected: usize) -> Result<()> {
    if features.shape().len() != 2 || features.cols() != expected {
        return Err(invalid(format!(
            "feature width {:?} does not match model input width {expected}",
            features.shape()
        )));
    }
    if features.rows() == 0 {
        return Err(invalid("no documents to score"));
    }
    Ok(())
}

/// Column `[n, 1]` scores as a plain vector.
pub(crate) fn column_values(g: &Graph, v: Var) -> Vec<f64> {
    g.value(v).data().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlp_shapes() {
        let mut store = ParamStore::new();
        let mut rng = RngState::new(0);
        let mlp = Mlp::new(&mut store, "m", 4, &[8, 3], 2, &mut rng);
        assert_eq!(mlp.input_width(), 4);
        assert_eq!(mlp.output_width(), 2);
        let mut g = Graph::new();
        let x = g.constant(Tensor::full(5, 4, 0.3));
        let y = mlp.forward(&mut g, &mut Mode::Eval(&store), x);
        assert_eq!(g.value(y).shape(), &[5, 2]);
        let mut g = Graph::new();
        let x = g.constant(Tensor::full(5, 4, 0.3));
        let before = store.clone();
        mlp.forward(&mut g, &mut Mode::Train(&mut store), x);
        assert_ne!(
            before.value(mlp.hidden[0].1.running_mean),
            store.value(mlp.hidden[0].1.running_mean)
        );
    }

    #[test]
    fn width_checks() {
        assert!(check_width(&Tensor::zeros(2, 3), 3).is_ok());
        assert!(check_width(&Tensor::zeros(2, 3), 4).is_err());
        assert!(check_width(&Tensor::zeros(0, 3), 3).is_err());
    }
}
