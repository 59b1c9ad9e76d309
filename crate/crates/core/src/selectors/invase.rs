use fsltr_tensor::optim::{AdamConfig, AdamState};
use fsltr_tensor::{Graph, ParamStore, RngState, Tensor, Var};

use super::common::{ensure_finite, selected_indices, selection_frequency};
use crate::data::{Dataset, QueryGroup};
use crate::error::{invalid, Result};
use crate::layers::{check_width, column_values, Mlp, Mode};
use crate::model::{optimize, Model, Selection, SelectionKind};

/// Selection probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-6;

/// `advantage · Σ [m log p + (1 - m) log(1 - p)] + lambda · mean(p)`, with
/// the advantage held constant.
pub fn invase_selector_objective(g: &mut Graph, p: Var, mask: &Tensor, advantage: f64, lambda: f64) -> Var {
    let m = g.constant(mask.clone());
    let not_m = g.constant(mask.map(|v| 1.0 - v));
    let log_p = g.log(p);
    let neg = g.scale(p, -1.0);
    let q = g.add_scalar(neg, 1.0);
    let log_q = g.log(q);
    let a = g.mul(m, log_p);
    let b = g.mul(not_m, log_q);
    let ll = g.add(a, b);
    let ll = g.sum(ll);
    let policy = g.scale(ll, advantage);
    let mean_p = g.mean(p);
    let penalty = g.scale(mean_p, lambda);
    g.add(policy, penalty)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvaseLosses {
    pub selector: f64,
    pub predictor: f64,
    pub baseline: f64,
}

/// Bernoulli selector, a predictor on the masked input and a baseline on
/// the full input.
#[derive(Clone, Debug)]
pub struct Invase {
    pub store: ParamStore,
    pub selector: Mlp,
    pub predictor: Mlp,
    pub baseline: Mlp,
    pub lambda: f64,
    pub optimizer: AdamState,
}

impl Invase {
    pub fn new(d: usize, lambda: f64, widths: &[usize], adam: AdamConfig, rng: &mut RngState) -> Result<Invase> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda must be finite and >= 0"));
        }
        let mut store = ParamStore::new();
        let selector = Mlp::new(&mut store, "selector", d, widths, d, rng);
        let predictor = Mlp::new(&mut store, "predictor", d, widths, 1, rng);
        let baseline = Mlp::new(&mut store, "baseline", d, widths, 1, rng);
        Ok(Invase {
            store,
            selector,
            predictor,
            baseline,
            lambda,
            optimizer: AdamState::new(adam),
        })
    }

    /// Evaluation-mode selection probabilities, `[docs, d]`.
    pub fn probabilities(&self, features: &Tensor) -> Result<Tensor> {
        check_width(features, self.input_width())?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let l = self.selector.forward(&mut g, &mut Mode::Eval(&self.store), x);
        let p = g.sigmoid(l);
        let p = g.value(p).clone();
        ensure_finite(&p, "selection probabilities")?;
        Ok(p)
    }

    /// `p >= 0.5`.
    pub fn hard_masks(&self, features: &Tensor) -> Result<Tensor> {
        Ok(self.probabilities(features)?.map(|p| if p >= 0.5 { 1.0 } else { 0.0 }))
    }

    /// Updates selector, predictor and baseline on one query.
    pub fn step(&mut self, group: &QueryGroup, rng: &mut RngState) -> Result<InvaseLosses> {
        check_width(&group.features, self.input_width())?;
        let labels = group.labels_f64();
        let mut g = Graph::new();
        let x = g.constant(group.features.clone());
        let mut mode = Mode::Train(&mut self.store);
        let logits = self.selector.forward(&mut g, &mut mode, x);
        let p = g.sigmoid(logits);
        let p = g.clamp(p, PROB_CLAMP, 1.0 - PROB_CLAMP);
        let mut mask = g.value(p).clone();
        for v in mask.data_mut() {
            *v = if rng.bernoulli(*v) { 1.0 } else { 0.0 };
        }
        let m = g.constant(mask.clone());
        let xm = g.mul(x, m);
        let s_pred = self.predictor.forward(&mut g, &mut mode, xm);
        let l_pred = g.listwise_ce(s_pred, &labels);
        let s_base = self.baseline.forward(&mut g, &mut mode, x);
        let l_base = g.listwise_ce(s_base, &labels);
        let advantage = g.value(l_pred).item() - g.value(l_base).item();
        let l_sel = invase_selector_objective(&mut g, p, &mask, advantage, self.lambda);
        let nets = g.add(l_pred, l_base);
        let total = g.add(nets, l_sel);
        let losses = InvaseLosses {
            selector: g.value(l_sel).item(),
            predictor: g.value(l_pred).item(),
            baseline: g.value(l_base).item(),
        };
        optimize(&g, total, &mut self.store, &mut self.optimizer)?;
        Ok(losses)
    }

    fn score_masked(&self, features: &Tensor, mask: Tensor) -> Vec<f64> {
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let m = g.constant(mask);
        let xm = g.mul(x, m);
        let s = self.predictor.forward(&mut g, &mut Mode::Eval(&self.store), xm);
        column_values(&g, s)
    }

    pub fn extract_selection(&self, train: &Dataset) -> Result<Selection> {
        let values = selection_frequency(train, |x| self.hard_masks(x))?;
        Ok(Selection {
            kind: SelectionKind::Frequency,
            selected: selected_indices(&values, None),
            values,
        })
    }
}

impl Model for Invase {
    fn input_width(&self) -> usize {
        self.predictor.input_width()
    }

    fn train_step(&mut self, group: &QueryGroup, _tau: f64, rng: &mut RngState) -> Result<f64> {
        Ok(self.step(group, rng)?.predictor)
    }

    fn score(&self, features: &Tensor) -> Result<Vec<f64>> {
        let mask = self.hard_masks(features)?;
        Ok(self.score_masked(features, mask))
    }

    fn score_sampled(&self, features: &Tensor, _tau: f64, rng: &mut RngState) -> Result<Vec<f64>> {
        let mut mask = self.probabilities(features)?;
        for v in mask.data_mut() {
            *v = if rng.bernoulli(*v) { 1.0 } else { 0.0 };
        }
        Ok(self.score_masked(features, mask))
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
}
