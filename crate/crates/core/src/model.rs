//! The interface shared by the plain ranker and every selection method.

use fsltr_tensor::optim::AdamState;
use fsltr_tensor::{Graph, ParamStore, RngState, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::data::QueryGroup;
use crate::error::{CoreError, Result};

pub trait Model: Clone + Send + Sync {
    fn input_width(&self) -> usize;

    /// One optimizer step on one query. Returns the training objective.
    fn train_step(&mut self, group: &QueryGroup, tau: f64, rng: &mut RngState) -> Result<f64>;

    /// Deterministic evaluation-mode scores, one per row.
    fn score(&self, features: &Tensor) -> Result<Vec<f64>>;

    /// Scores using sampled rather than deterministic masks.
    fn score_sampled(&self, features: &Tensor, _tau: f64, _rng: &mut RngState) -> Result<Vec<f64>> {
        self.score(features)
    }

    fn store(&self) -> &ParamStore;
    fn store_mut(&mut self) -> &mut ParamStore;
}

/// Backpropagates `loss`, applies one Adam step to every trainable
/// parameter and returns the loss value.
pub(crate) fn optimize(g: &Graph, loss: Var, store: &mut ParamStore, opt: &mut AdamState) -> Result<f64> {
    let value = g.value(loss).item();
    if !value.is_finite() {
        return Err(CoreError::Divergence(format!("non-finite loss {value}")));
    }
    let grads = g.backward(loss)?;
    store.zero_grad();
    grads.accumulate_into(g, store);
    opt.step_store(store)?;
    if !store.all_finite() {
        return Err(CoreError::Divergence("non-finite parameter after update".into()));
    }
    Ok(value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionKind {
    /// Share of training documents on which a feature was selected.
    Frequency,
    /// Learned per-feature importance.
    Importance,
}

/// What a trained method selects, plus a per-feature ranking vector used to
/// build budgeted masks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub kind: SelectionKind,
    pub values: Vec<f64>,
    /// Features the method itself selects, ascending.
    pub selected: Vec<usize>,
}

impl Selection {
    pub fn num_selected(&self) -> usize {
        self.selected.len()
    }

    /// Top-`count` features by `values`, ties by ascending index.
    pub fn budget_mask(&self, count: usize) -> Vec<bool> {
        let mut mask = vec![false; self.values.len()];
        for j in fsltr_tensor::functional::top_k(&self.values, count) {
            mask[j] = true;
        }
        mask
    }
}
