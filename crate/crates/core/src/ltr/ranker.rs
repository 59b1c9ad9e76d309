use fsltr_tensor::optim::{AdamConfig, AdamState};
use fsltr_tensor::{Graph, ParamStore, RngState, Tensor};

use crate::data::QueryGroup;
use crate::error::{invalid, Result};
use crate::layers::{check_width, column_values, Mlp, Mode};
use crate::model::{optimize, Model};

/// Listwise softmax cross-entropy of one query's scores against its labels.
pub fn listwise_softmax_ce(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(invalid(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let log_p = fsltr_tensor::functional::log_softmax(scores)?;
    let n = scores.len() as f64;
    Ok(-labels
        .iter()
        .zip(&log_p)
        .map(|(&y, lp)| if y == 0 { 0.0 } else { f64::from(y) * lp })
        .sum::<f64>()
        / n)
}

/// Fully connected tanh network with batch norm and a scalar head.
#[derive(Clone, Debug)]
pub struct RankerModel {
    pub store: ParamStore,
    pub net: Mlp,
    pub optimizer: AdamState,
}

impl RankerModel {
    pub fn new(input: usize, widths: &[usize], adam: AdamConfig, rng: &mut RngState) -> RankerModel {
        let mut store = ParamStore::new();
        let net = Mlp::new(&mut store, "ranker", input, widths, 1, rng);
        RankerModel {
            store,
            net,
            optimizer: AdamState::new(adam),
        }
    }

    pub fn score_documents(&self, features: &Tensor) -> Result<Vec<f64>> {
        check_width(features, self.net.input_width())?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let s = self.net.forward(&mut g, &mut Mode::Eval(&self.store), x);
        Ok(column_values(&g, s))
    }
}

impl Model for RankerModel {
    fn input_width(&self) -> usize {
        self.net.input_width()
    }

    fn train_step(&mut self, group: &QueryGroup, _tau: f64, _rng: &mut RngState) -> Result<f64> {
        check_width(&group.features, self.input_width())?;
        let mut g = Graph::new();
        let x = g.constant(group.features.clone());
        let s = self.net.forward(&mut g, &mut Mode::Train(&mut self.store), x);
        let loss = g.listwise_ce(s, &group.labels_f64());
        optimize(&g, loss, &mut self.store, &mut self.optimizer)
    }

    fn score(&self, features: &Tensor) -> Result<Vec<f64>> {
        self.score_documents(features)
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
}
