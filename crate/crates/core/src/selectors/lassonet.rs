use fsltr_tensor::optim::{AdamConfig, AdamState};
use fsltr_tensor::{Graph, ParamId, ParamStore, RngState, Tensor, Var};

use super::common::ensure_finite;
use crate::data::QueryGroup;
use crate::error::{invalid, Result};
use crate::layers::{check_width, column_values, Mlp, Mode};
use crate::model::{optimize, Model, Selection, SelectionKind};

/// Hierarchical proximal step for one feature.
///
/// Minimizes `½(θ' - θ)² + ½‖w' - w‖² + penalty·|θ'|` subject to
/// `‖w'‖_∞ ≤ m·|θ'|`. The returned pair satisfies the constraint exactly.
pub fn hier_prox(w: &[f64], theta: f64, penalty: f64, m: f64) -> Result<(Vec<f64>, f64)> {
    if !(m.is_finite() && m > 0.0) {
        return Err(invalid(format!("hierarchy coefficient must be > 0, got {m}")));
    }
    if !(penalty.is_finite() && penalty >= 0.0) {
        return Err(invalid(format!("penalty must be finite and >= 0, got {penalty}")));
    }
    let mut mags: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let v = theta.abs();
    let mut prefix = 0.0;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=mags.len() {
        if k > 0 {
            prefix += mags[k - 1];
        }
        let wk = m / (1.0 + k as f64 * m * m) * (v + m * prefix - penalty).max(0.0);
        let upper = if k == 0 { f64::INFINITY } else { mags[k - 1] };
        let lower = mags.get(k).copied().unwrap_or(0.0);
        let violation = (lower - wk).max(0.0) + (wk - upper).max(0.0);
        if violation < best.0 {
            best = (violation, wk);
            if violation == 0.0 {
                break;
            }
        }
    }
    let wk = best.1;
    let sign = if theta < 0.0 { -1.0 } else { 1.0 };
    let theta_new = sign * wk / m;
    let bound = m * theta_new.abs();
    let w_new = w.iter().map(|&x| x.signum() * x.abs().min(bound)).collect();
    Ok((w_new, theta_new))
}

/// Ranker with a linear per-feature skip connection `θ`, whose magnitude
/// bounds each feature's first-layer weights.
#[derive(Clone, Debug)]
pub struct LassoNet {
    pub store: ParamStore,
    pub ranker: Mlp,
    /// `[d, 1]`.
    pub theta: ParamId,
    pub lambda: f64,
    /// Hierarchy coefficient `M`.
    pub hierarchy: f64,
    pub optimizer: AdamState,
}

impl LassoNet {
    pub fn new(
        d: usize,
        widths: &[usize],
        hierarchy: f64,
        lambda: f64,
        adam: AdamConfig,
        rng: &mut RngState,
    ) -> Result<LassoNet> {
        if !(hierarchy.is_finite() && hierarchy > 0.0) {
            return Err(invalid(format!("hierarchy coefficient must be > 0, got {hierarchy}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda must be finite and >= 0"));
        }
        let mut store = ParamStore::new();
        let ranker = Mlp::new(&mut store, "ranker", d, widths, 1, rng);
        let init = (0..d).map(|_| 0.1 * rng.normal()).collect();
        let theta = store.add("skip.theta", Tensor::column(init));
        let mut model = LassoNet {
            store,
            ranker,
            theta,
            lambda,
            hierarchy,
            optimizer: AdamState::new(adam),
        };
        model.prox(0.0)?;
        Ok(model)
    }

    fn forward(&self, g: &mut Graph, mode: &mut Mode, x: Var) -> Var {
        let s = self.ranker.forward(g, mode, x);
        let theta = g.param(mode.store(), self.theta);
        let skip = g.matmul(x, theta);
        g.add(s, skip)
    }

    /// Applies the proximal step with the given penalty to every feature.
    pub fn prox(&mut self, penalty: f64) -> Result<()> {
        let weight = self.ranker.first_layer().weight;
        let h = self.store.value(weight).cols();
        let d = self.input_width();
        for j in 0..d {
            let row = self.store.value(weight).data()[j * h..(j + 1) * h].to_vec();
            let theta = self.store.value(self.theta).data()[j];
            let (row, theta) = hier_prox(&row, theta, penalty, self.hierarchy)?;
            self.store.value_mut(weight).data_mut()[j * h..(j + 1) * h].copy_from_slice(&row);
            self.store.value_mut(self.theta).data_mut()[j] = theta;
        }
        Ok(())
    }

    pub fn theta_values(&self) -> &[f64] {
        self.store.value(self.theta).data()
    }

    /// Features with a nonzero skip weight.
    pub fn active_features(&self) -> Vec<usize> {
        (0..self.input_width()).filter(|&j| self.theta_values()[j] != 0.0).collect()
    }

    /// Whether `‖W_j‖_∞ ≤ M·|θ_j|` holds for every feature.
    pub fn constraint_holds(&self) -> bool {
        let w = self.store.value(self.ranker.first_layer().weight);
        let h = w.cols();
        self.theta_values().iter().enumerate().all(|(j, t)| {
            let bound = self.hierarchy * t.abs();
            w.data()[j * h..(j + 1) * h].iter().all(|v| v.abs() <= bound)
        })
    }

    pub fn extract_selection(&self) -> Result<Selection> {
        ensure_finite(self.store.value(self.theta), "skip weights")?;
        Ok(Selection {
            kind: SelectionKind::Importance,
            values: self.theta_values().iter().map(|t| t.abs()).collect(),
            selected: self.active_features(),
        })
    }
}

impl Model for LassoNet {
    fn input_width(&self) -> usize {
        self.ranker.input_width()
    }

    fn train_step(&mut self, group: &QueryGroup, _tau: f64, _rng: &mut RngState) -> Result<f64> {
        check_width(&group.features, self.input_width())?;
        let mut g = Graph::new();
        let x = g.constant(group.features.clone());
        let mut store = std::mem::take(&mut self.store);
        let s = self.forward(&mut g, &mut Mode::Train(&mut store), x);
        self.store = store;
        let loss = g.listwise_ce(s, &group.labels_f64());
        let value = optimize(&g, loss, &mut self.store, &mut self.optimizer)?;
        self.prox(self.optimizer.config.lr * self.lambda)?;
        Ok(value)
    }

    fn score(&self, features: &Tensor) -> Result<Vec<f64>> {
        check_width(features, self.input_width())?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let s = self.forward(&mut g, &mut Mode::Eval(&self.store), x);
        Ok(column_values(&g, s))
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
    use fsltr_tensor::gradcheck::grad_check;

    #[test]
    fn pure_soft_threshold() {
        let (w, t) = hier_prox(&[0.0; 3], 0.3, 0.1, 2.0).unwrap();
        assert!((t - 0.2).abs() < 1e-15);
        assert_eq!(w, vec![0.0; 3]);
        let (_, t) = hier_prox(&[0.0; 3], -0.05, 0.1, 2.0).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn feasible_point_without_penalty_is_fixed() {
        let w = [0.1, -0.3, 0.25];
        let (w2, t2) = hier_prox(&w, -0.5, 0.0, 1.0).unwrap();
        assert_eq!(t2, -0.5);
        assert_eq!(w2, w.to_vec());
    }

    #[test]
    fn rejects_bad_hierarchy() {
        assert!(hier_prox(&[1.0], 1.0, 0.1, 0.0).is_err());
        assert!(hier_prox(&[1.0], 1.0, 0.1, -1.0).is_err());
        assert!(LassoNet::new(3, &[2], 0.0, 0.1, AdamConfig::default(), &mut RngState::new(0)).is_err());
    }

    #[test]
    fn constraint_holds_after_steps() {
        let mut m = LassoNet::new(6, &[5, 4], 3.0, 5.0, AdamConfig::default(), &mut RngState::new(0)).unwrap();
        assert!(m.constraint_holds());
        let mut rng = RngState::new(1);
        for step in 0..30 {
            let x = Tensor::matrix(5, 6, (0..30).map(|_| rng.normal()).collect()).unwrap();
            let q = QueryGroup::new(step, x, vec![0, 1, 2, 0, 4]).unwrap();
            m.train_step(&q, 1.0, &mut rng).unwrap();
            assert!(m.constraint_holds());
        }
    }

    #[test]
    fn pre_prox_objective_gradient() {
        let m = LassoNet::new(4, &[5], 2.0, 0.0, AdamConfig::default(), &mut RngState::new(2)).unwrap();
        let mut rng = RngState::new(3);
        for _ in 0..5 {
            let point = Tensor::matrix(3, 4, (0..12).map(|_| rng.normal()).collect()).unwrap();
            let report = grad_check(
                |g, x| {
                    let s = m.forward(g, &mut Mode::Eval(&m.store), x);
                    g.listwise_ce(s, &[2.0, 0.0, 1.0])
                },
                &point,
                1e-4,
            );
            assert!(report.passed, "{report:?}");
        }
    }
}
