use fsltr_tensor::functional::{argmax, top_k};
use fsltr_tensor::nn::Linear;
use fsltr_tensor::optim::{AdamConfig, AdamState};
use fsltr_tensor::{Graph, ParamId, ParamStore, RngState, Tensor, Var};

use super::common::{check_budget, check_tau, ensure_finite, gumbel_noise, relaxed_top_k, selected_indices, selection_frequency};
use crate::data::{Dataset, QueryGroup};
use crate::error::{invalid, Result};
use crate::layers::{check_width, column_values, Mlp, Mode};
use crate::model::{optimize, Model, Selection, SelectionKind};

/// Relaxed feature mask from sampled group assignments and sampled group
/// selections: `mask[n, i] = Σ_g assign[i, g] · groups[n, g]`.
///
/// `assign_logits` is `[d, G]` and `group_logits` is `[docs, G]`.
pub fn ifg_relaxed_mask(
    g: &mut Graph,
    assign_logits: Var,
    group_logits: Var,
    k_groups: usize,
    tau: f64,
    rng: &mut RngState,
) -> Result<Var> {
    check_tau(tau)?;
    let (d, groups) = (g.value(assign_logits).rows(), g.value(assign_logits).cols());
    if g.value(group_logits).cols() != groups {
        return Err(invalid(format!(
            "{} group logits for {groups} groups",
            g.value(group_logits).cols()
        )));
    }
    check_budget(k_groups, groups)?;
    let noise = gumbel_noise(rng, d, groups);
    let assign = g.concrete(assign_logits, noise, tau);
    let sel = relaxed_top_k(g, group_logits, k_groups, tau, rng);
    let at = g.transpose(assign);
    Ok(g.matmul(sel, at))
}

pub struct IfgLosses {
    pub ranking: Var,
    pub reconstruction: Var,
    pub total: Var,
}

/// Feature groups with a learned assignment, a per-document group
/// selector, a linear input-reconstruction head and a ranker.
#[derive(Clone, Debug)]
pub struct Ifg {
    pub store: ParamStore,
    /// `[d, G]` feature-to-group logits.
    pub assign: ParamId,
    pub group_net: Mlp,
    pub reconstruction: Linear,
    pub ranker: Mlp,
    pub group_budget: usize,
    pub lambda_rec: f64,
    pub optimizer: AdamState,
}

impl Ifg {
    pub fn default_groups(d: usize) -> usize {
        d.div_ceil(5).max(1)
    }

    pub fn new(
        d: usize,
        groups: usize,
        group_budget: usize,
        lambda_rec: f64,
        widths: &[usize],
        adam: AdamConfig,
        rng: &mut RngState,
    ) -> Result<Ifg> {
        if groups == 0 || d == 0 {
            return Err(invalid("need at least one feature and one group"));
        }
        check_budget(group_budget, groups)?;
        if !(lambda_rec.is_finite() && lambda_rec >= 0.0) {
            return Err(invalid("lambda_rec must be finite and >= 0"));
        }
        let mut store = ParamStore::new();
        let init = (0..d * groups).map(|_| 0.1 * rng.normal()).collect();
        let assign = store.add("groups.assign", Tensor::matrix(d, groups, init)?);
        let group_net = Mlp::new(&mut store, "groups.selector", d, widths, groups, rng);
        let reconstruction = Linear::new(&mut store, "reconstruction", d, d, rng);
        let ranker = Mlp::new(&mut store, "ranker", d, widths, 1, rng);
        Ok(Ifg {
            store,
            assign,
            group_net,
            reconstruction,
            ranker,
            group_budget,
            lambda_rec,
            optimizer: AdamState::new(adam),
        })
    }

    pub fn num_groups(&self) -> usize {
        self.store.value(self.assign).cols()
    }

    /// Builds the training objective; BN statistics update as a side effect.
    pub fn losses(&mut self, g: &mut Graph, group: &QueryGroup, tau: f64, rng: &mut RngState) -> Result<IfgLosses> {
        check_width(&group.features, self.input_width())?;
        let x = g.constant(group.features.clone());
        let a = g.param(&self.store, self.assign);
        let mut mode = Mode::Train(&mut self.store);
        let gl = self.group_net.forward(g, &mut mode, x);
        let mask = ifg_relaxed_mask(g, a, gl, self.group_budget, tau, rng)?;
        let xm = g.mul(x, mask);
        let s = self.ranker.forward(g, &mut mode, xm);
        let ranking = g.listwise_ce(s, &group.labels_f64());
        let rec = mode.linear(g, &self.reconstruction, xm);
        let reconstruction = g.mse(rec, x);
        let weighted = g.scale(reconstruction, self.lambda_rec);
        let total = g.add(ranking, weighted);
        Ok(IfgLosses {
            ranking,
            reconstruction,
            total,
        })
    }

    /// Hard group of each feature.
    pub fn feature_groups(&self) -> Result<Vec<usize>> {
        let a = self.store.value(self.assign);
        ensure_finite(a, "group assignment logits")?;
        Ok((0..a.rows()).map(|i| argmax(a.row_slice(i))).collect())
    }

    /// Per-document masks keeping the features of each document's top
    /// `group_budget` groups.
    pub fn hard_masks(&self, features: &Tensor) -> Result<Tensor> {
        check_width(features, self.input_width())?;
        let assignment = self.feature_groups()?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let gl = self.group_net.forward(&mut g, &mut Mode::Eval(&self.store), x);
        let gl = g.value(gl);
        ensure_finite(gl, "group logits")?;
        let (n, d) = (features.rows(), features.cols());
        let mut out = Tensor::zeros(n, d);
        for r in 0..n {
            let mut chosen = vec![false; self.num_groups()];
            for grp in top_k(gl.row_slice(r), self.group_budget) {
                chosen[grp] = true;
            }
            for (i, &grp) in assignment.iter().enumerate() {
                if chosen[grp] {
                    out.data_mut()[r * d + i] = 1.0;
                }
            }
        }
        Ok(out)
    }

    fn score_masked(&self, features: &Tensor, mask: Tensor) -> Vec<f64> {
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let m = g.constant(mask);
        let xm = g.mul(x, m);
        let s = self.ranker.forward(&mut g, &mut Mode::Eval(&self.store), xm);
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

impl Model for Ifg {
    fn input_width(&self) -> usize {
        self.ranker.input_width()
    }

    fn train_step(&mut self, group: &QueryGroup, tau: f64, rng: &mut RngState) -> Result<f64> {
        let mut g = Graph::new();
        let losses = self.losses(&mut g, group, tau, rng)?;
        optimize(&g, losses.total, &mut self.store, &mut self.optimizer)
    }

    fn score(&self, features: &Tensor) -> Result<Vec<f64>> {
        let mask = self.hard_masks(features)?;
        Ok(self.score_masked(features, mask))
    }

    fn score_sampled(&self, features: &Tensor, tau: f64, rng: &mut RngState) -> Result<Vec<f64>> {
        check_width(features, self.input_width())?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let gl = self.group_net.forward(&mut g, &mut Mode::Eval(&self.store), x);
        let a = g.constant(self.store.value(self.assign).clone());
        let m = ifg_relaxed_mask(&mut g, a, gl, self.group_budget, tau, rng)?;
        let mask = g.value(m).clone();
        Ok(self.score_masked(features, mask))
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
}
