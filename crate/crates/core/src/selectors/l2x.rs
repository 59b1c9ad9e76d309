use fsltr_tensor::optim::{AdamConfig, AdamState};
use fsltr_tensor::{Graph, ParamStore, RngState, Tensor};

use super::common::{check_budget, check_tau, ensure_finite, hard_top_k_rows, relaxed_top_k, selected_indices, selection_frequency};
use crate::data::{Dataset, QueryGroup};
use crate::error::Result;
use crate::layers::{check_width, column_values, Mlp, Mode};
use crate::model::{optimize, Model, Selection, SelectionKind};

/// Local selector network producing per-document logits, followed by a
/// ranker on the masked input.
#[derive(Clone, Debug)]
pub struct L2x {
    pub store: ParamStore,
    pub selector: Mlp,
    pub ranker: Mlp,
    pub k: usize,
    pub optimizer: AdamState,
}

impl L2x {
    pub fn new(d: usize, k: usize, widths: &[usize], adam: AdamConfig, rng: &mut RngState) -> Result<L2x> {
        check_budget(k, d)?;
        let mut store = ParamStore::new();
        let selector = Mlp::new(&mut store, "selector", d, widths, d, rng);
        let ranker = Mlp::new(&mut store, "ranker", d, widths, 1, rng);
        Ok(L2x {
            store,
            selector,
            ranker,
            k,
            optimizer: AdamState::new(adam),
        })
    }

    /// Evaluation-mode selector logits, `[docs, d]`.
    pub fn selector_logits(&self, features: &Tensor) -> Result<Tensor> {
        check_width(features, self.input_width())?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let l = self.selector.forward(&mut g, &mut Mode::Eval(&self.store), x);
        Ok(g.value(l).clone())
    }

    /// Relaxed masks sampled from the evaluation-mode logits.
    pub fn soft_mask(&self, features: &Tensor, tau: f64, rng: &mut RngState) -> Result<Tensor> {
        check_tau(tau)?;
        let logits = self.selector_logits(features)?;
        let mut g = Graph::new();
        let l = g.constant(logits);
        let m = relaxed_top_k(&mut g, l, self.k, tau, rng);
        Ok(g.value(m).clone())
    }

    /// Per-document top-k masks.
    pub fn hard_masks(&self, features: &Tensor) -> Result<Tensor> {
        let logits = self.selector_logits(features)?;
        ensure_finite(&logits, "selector logits")?;
        Ok(hard_top_k_rows(&logits, self.k))
    }

    fn score_masked(&self, features: &Tensor, mask: Tensor) -> Vec<f64> {
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let m = g.constant(mask);
        let xm = g.mul(x, m);
        let s = self.ranker.forward(&mut g, &mut Mode::Eval(&self.store), xm);
        column_values(&g, s)
    }

    /// Selection frequency of every feature over the documents of `train`.
    pub fn extract_selection(&self, train: &Dataset) -> Result<Selection> {
        let values = selection_frequency(train, |x| self.hard_masks(x))?;
        Ok(Selection {
            kind: SelectionKind::Frequency,
            selected: selected_indices(&values, None),
            values,
        })
    }
}

impl Model for L2x {
    fn input_width(&self) -> usize {
        self.ranker.input_width()
    }

    fn train_step(&mut self, group: &QueryGroup, tau: f64, rng: &mut RngState) -> Result<f64> {
        check_width(&group.features, self.input_width())?;
        check_tau(tau)?;
        let mut g = Graph::new();
        let x = g.constant(group.features.clone());
        let mut mode = Mode::Train(&mut self.store);
        let logits = self.selector.forward(&mut g, &mut mode, x);
        let mask = relaxed_top_k(&mut g, logits, self.k, tau, rng);
        let xm = g.mul(x, mask);
        let s = self.ranker.forward(&mut g, &mut mode, xm);
        let loss = g.listwise_ce(s, &group.labels_f64());
        optimize(&g, loss, &mut self.store, &mut self.optimizer)
    }

    fn score(&self, features: &Tensor) -> Result<Vec<f64>> {
        let mask = self.hard_masks(features)?;
        Ok(self.score_masked(features, mask))
    }

    fn score_sampled(&self, features: &Tensor, tau: f64, rng: &mut RngState) -> Result<Vec<f64>> {
        let mask = self.soft_mask(features, tau, rng)?;
        Ok(self.score_masked(features, mask))
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Split;

    fn model(d: usize, k: usize) -> L2x {
        L2x::new(d, k, &[8, 6], AdamConfig::default(), &mut RngState::new(1)).unwrap()
    }

    #[test]
    fn budget_is_checked() {
        assert!(L2x::new(4, 5, &[3], AdamConfig::default(), &mut RngState::new(0)).is_err());
        assert!(L2x::new(4, 0, &[3], AdamConfig::default(), &mut RngState::new(0)).is_err());
    }

    #[test]
    fn low_temperature_masks_have_at_most_k_large_entries() {
        let m = model(12, 3);
        let mut rng = RngState::new(4);
        let x = Tensor::matrix(5, 12, (0..60).map(|_| rng.normal()).collect()).unwrap();
        for _ in 0..20 {
            let mask = m.soft_mask(&x, 0.05, &mut rng).unwrap();
            for r in 0..5 {
                let row = mask.row_slice(r);
                assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
                assert!(row.iter().filter(|v| **v > 0.5).count() <= 3);
            }
        }
    }

    #[test]
    fn hard_masks_select_k_per_document() {
        let m = model(10, 4);
        let x = Tensor::matrix(3, 10, (0..30).map(|i| (i as f64).cos()).collect()).unwrap();
        let h = m.hard_masks(&x).unwrap();
        for r in 0..3 {
            assert_eq!(h.row_slice(r).iter().sum::<f64>(), 4.0);
        }
    }

    #[test]
    fn nan_logits_are_invalid_state() {
        let mut m = model(4, 2);
        m.store.value_mut(m.selector.head.bias).data_mut()[0] = f64::NAN;
        let x = Tensor::zeros(2, 4);
        let ds = Dataset::new(
            vec![QueryGroup::new(1, x.clone(), vec![1, 0]).unwrap()],
            4,
            Split::Train,
        )
        .unwrap();
        assert!(matches!(
            m.extract_selection(&ds),
            Err(crate::error::CoreError::InvalidState(_))
        ));
    }
}
