use fsltr_tensor::functional::{softmax, top_k};
use fsltr_tensor::optim::{AdamConfig, AdamState};
use fsltr_tensor::{Graph, ParamId, ParamStore, RngState, Tensor};

use super::common::{check_budget, check_tau, ensure_finite, max_concrete, relaxed_top_k};
use crate::data::QueryGroup;
use crate::error::Result;
use crate::layers::{check_width, column_values, Mlp, Mode};
use crate::model::{optimize, Model, Selection, SelectionKind};

/// Relaxed top-k mask drawn from one global logit vector.
pub fn gl2x_mask(logits: &[f64], k: usize, tau: f64, rng: &mut RngState) -> Result<Vec<f64>> {
    check_budget(k, logits.len())?;
    let noise: Vec<Vec<f64>> = (0..k)
        .map(|_| fsltr_tensor::rng::sample_gumbel(rng, logits.len()))
        .collect();
    max_concrete(logits, &noise, tau)
}

/// A single learnable logit vector shared by every document, followed by a
/// ranker on the masked input.
#[derive(Clone, Debug)]
pub struct GL2x {
    pub store: ParamStore,
    /// `[1, d]`.
    pub logits: ParamId,
    pub ranker: Mlp,
    pub k: usize,
    pub optimizer: AdamState,
}

impl GL2x {
    pub fn new(d: usize, k: usize, widths: &[usize], adam: AdamConfig, rng: &mut RngState) -> Result<GL2x> {
        check_budget(k, d)?;
        let mut store = ParamStore::new();
        let logits = store.add("selector.logits", Tensor::zeros(1, d));
        let ranker = Mlp::new(&mut store, "ranker", d, widths, 1, rng);
        Ok(GL2x {
            store,
            logits,
            ranker,
            k,
            optimizer: AdamState::new(adam),
        })
    }

    pub fn logit_values(&self) -> &[f64] {
        self.store.value(self.logits).data()
    }

    /// Indices of the `k` largest logits, ascending.
    pub fn selected(&self) -> Result<Vec<usize>> {
        ensure_finite(self.store.value(self.logits), "selector logits")?;
        let mut idx = top_k(self.logit_values(), self.k);
        idx.sort_unstable();
        Ok(idx)
    }

    pub fn hard_mask(&self) -> Result<Tensor> {
        let mut mask = vec![0.0; self.logit_values().len()];
        for j in self.selected()? {
            mask[j] = 1.0;
        }
        Ok(Tensor::row(mask))
    }

    fn score_masked(&self, features: &Tensor, mask: Tensor) -> Result<Vec<f64>> {
        check_width(features, self.input_width())?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let m = g.constant(mask);
        let xm = g.mul_row(x, m);
        let s = self.ranker.forward(&mut g, &mut Mode::Eval(&self.store), xm);
        Ok(column_values(&g, s))
    }

    /// Softmax of the logits as importance; the top-k set as the selection.
    pub fn extract_selection(&self) -> Result<Selection> {
        let selected = self.selected()?;
        Ok(Selection {
            kind: SelectionKind::Importance,
            values: softmax(self.logit_values())?,
            selected,
        })
    }
}

impl Model for GL2x {
    fn input_width(&self) -> usize {
        self.ranker.input_width()
    }

    fn train_step(&mut self, group: &QueryGroup, tau: f64, rng: &mut RngState) -> Result<f64> {
        check_width(&group.features, self.input_width())?;
        check_tau(tau)?;
        let mut g = Graph::new();
        let x = g.constant(group.features.clone());
        let zeta = g.param(&self.store, self.logits);
        let mask = relaxed_top_k(&mut g, zeta, self.k, tau, rng);
        let xm = g.mul_row(x, mask);
        let s = self.ranker.forward(&mut g, &mut Mode::Train(&mut self.store), xm);
        let loss = g.listwise_ce(s, &group.labels_f64());
        optimize(&g, loss, &mut self.store, &mut self.optimizer)
    }

    fn score(&self, features: &Tensor) -> Result<Vec<f64>> {
        let mask = self.hard_mask()?;
        self.score_masked(features, mask)
    }

    fn score_sampled(&self, features: &Tensor, tau: f64, rng: &mut RngState) -> Result<Vec<f64>> {
        let mask = gl2x_mask(self.logit_values(), self.k, tau, rng)?;
        self.score_masked(features, Tensor::row(mask))
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
}
