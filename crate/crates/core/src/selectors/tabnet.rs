use fsltr_tensor::functional::sparsemax_threshold;
use fsltr_tensor::nn::{BatchNorm, Linear};
use fsltr_tensor::optim::{AdamConfig, AdamState};
use fsltr_tensor::{Graph, ParamStore, RngState, Tensor, Var};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::common::{ensure_finite, selected_indices};
use crate::data::{Dataset, QueryGroup};
use crate::error::{invalid, Result};
use crate::layers::{check_width, column_values, Mode};
use crate::model::{optimize, Model, Selection, SelectionKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabNetConfig {
    pub steps: usize,
    /// Prior relaxation; values below 1 could drive priors negative.
    pub gamma: f64,
    pub lambda_sparse: f64,
    pub decision_width: usize,
    pub attention_width: usize,
}

impl Default for TabNetConfig {
    fn default() -> Self {
        Self {
            steps: 4,
            gamma: 1.3,
            lambda_sparse: 1e-3,
            decision_width: 32,
            attention_width: 32,
        }
    }
}

impl TabNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(invalid("steps must be >= 1"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 1.0) {
            return Err(invalid(format!("gamma must be >= 1, got {}", self.gamma)));
        }
        if !(self.lambda_sparse.is_finite() && self.lambda_sparse >= 0.0) {
            return Err(invalid("lambda_sparse must be finite and >= 0"));
        }
        if self.decision_width == 0 || self.attention_width == 0 {
            return Err(invalid("decision and attention widths must be >= 1"));
        }
        Ok(())
    }
}

/// `P ⊙ (γ - a)`.
pub fn update_prior(prior: &[f64], mask: &[f64], gamma: f64) -> Vec<f64> {
    prior.iter().zip(mask).map(|(p, a)| p * (gamma - a)).collect()
}

#[derive(Clone, Debug)]
struct GluBlock {
    fc: Linear,
    bn: BatchNorm,
}

impl GluBlock {
    fn forward(&self, g: &mut Graph, mode: &mut Mode, x: Var) -> Var {
        let h = mode.linear(g, &self.fc, x);
        let h = mode.batch_norm(g, &self.bn, h);
        g.glu(h)
    }
}

#[derive(Clone, Debug)]
struct FeatureTransformer {
    blocks: Vec<GluBlock>,
}

impl FeatureTransformer {
    fn new(store: &mut ParamStore, name: &str, shared: &[Linear], own: Vec<Linear>, width: usize) -> Self {
        let blocks = shared
            .iter()
            .cloned()
            .chain(own)
            .enumerate()
            .map(|(i, fc)| GluBlock {
                fc,
                bn: BatchNorm::new(store, &format!("{name}.bn{i}"), 2 * width),
            })
            .collect();
        FeatureTransformer { blocks }
    }

    fn forward(&self, g: &mut Graph, mode: &mut Mode, x: Var) -> Var {
        let mut h = self.blocks[0].forward(g, mode, x);
        for block in &self.blocks[1..] {
            let r = block.forward(g, mode, h);
            let sum = g.add(h, r);
            h = g.scale(sum, std::f64::consts::FRAC_1_SQRT_2);
        }
        h
    }
}

#[derive(Clone, Debug)]
struct AttentiveTransformer {
    fc: Linear,
    bn: BatchNorm,
}

/// Graph handles from one forward pass.
pub struct TabNetForward {
    pub scores: Var,
    /// Sparsemax mask of each step, `[docs, d]`.
    pub masks: Vec<Var>,
    /// Prior-scaled sparsemax inputs of each step.
    pub mask_inputs: Vec<Var>,
    /// Rectified decision outputs of each step, `[docs, decision_width]`.
    pub decisions: Vec<Var>,
    /// Decision outputs before rectification.
    pub decision_inputs: Vec<Var>,
    /// Mean over steps of the mean row entropy of the masks.
    pub sparsity: Var,
}

impl TabNetForward {
    /// Distance of the forward pass to the nearest non-differentiable point:
    /// the smallest gap between a sparsemax input and its threshold, or
    /// between a decision input and zero.
    pub fn kink_margin(&self, g: &Graph) -> f64 {
        let mut margin = f64::INFINITY;
        for &z in &self.mask_inputs {
            let z = g.value(z);
            for r in 0..z.rows() {
                let row = z.row_slice(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let centered: Vec<f64> = row.iter().map(|v| v - max).collect();
                let tau = sparsemax_threshold(&centered);
                for v in centered {
                    margin = margin.min((v - tau).abs());
                }
            }
        }
        for &h in &self.decision_inputs {
            for v in g.value(h).data() {
                margin = margin.min(v.abs());
            }
        }
        margin
    }
}

/// Sequential attentive masking over the input with step-wise decisions.
#[derive(Clone, Debug)]
pub struct TabNet {
    pub store: ParamStore,
    pub config: TabNetConfig,
    input_bn: BatchNorm,
    initial: FeatureTransformer,
    steps: Vec<(AttentiveTransformer, FeatureTransformer)>,
    head: Linear,
    d: usize,
    pub optimizer: AdamState,
}

impl TabNet {
    pub fn new(d: usize, config: TabNetConfig, adam: AdamConfig, rng: &mut RngState) -> Result<TabNet> {
        config.validate()?;
        if d == 0 {
            return Err(invalid("need at least one feature"));
        }
        let width = config.decision_width + config.attention_width;
        let mut store = ParamStore::new();
        let input_bn = BatchNorm::new(&mut store, "input_bn", d);
        let shared = vec![
            Linear::new(&mut store, "shared.fc0", d, 2 * width, rng),
            Linear::new(&mut store, "shared.fc1", width, 2 * width, rng),
        ];
        let own = |store: &mut ParamStore, name: &str, rng: &mut RngState| {
            (0..2)
                .map(|i| Linear::new(store, &format!("{name}.fc{}", i + 2), width, 2 * width, rng))
                .collect::<Vec<_>>()
        };
        let initial_own = own(&mut store, "initial", rng);
        let initial = FeatureTransformer::new(&mut store, "initial", &shared, initial_own, width);
        let mut steps = Vec::with_capacity(config.steps);
        for s in 0..config.steps {
            let name = format!("step{s}");
            let att = AttentiveTransformer {
                fc: Linear::new(&mut store, &format!("{name}.attention.fc"), config.attention_width, d, rng),
                bn: BatchNorm::new(&mut store, &format!("{name}.attention.bn"), d),
            };
            let step_own = own(&mut store, &name, rng);
            let ft = FeatureTransformer::new(&mut store, &name, &shared, step_own, width);
            steps.push((att, ft));
        }
        let head = Linear::new(&mut store, "head", config.decision_width, 1, rng);
        Ok(TabNet {
            store,
            config,
            input_bn,
            initial,
            steps,
            head,
            d,
            optimizer: AdamState::new(adam),
        })
    }

    pub fn forward(&self, g: &mut Graph, mode: &mut Mode, x: Var) -> TabNetForward {
        let n = g.value(x).rows();
        let nd = self.config.decision_width;
        let na = self.config.attention_width;
        let xb = mode.batch_norm(g, &self.input_bn, x);
        let h = self.initial.forward(g, mode, xb);
        let mut att = g.slice_cols(h, nd, nd + na);
        let mut prior = g.constant(Tensor::full(n, self.d, 1.0));
        let mut out = TabNetForward {
            scores: x,
            masks: Vec::new(),
            mask_inputs: Vec::new(),
            decisions: Vec::new(),
            decision_inputs: Vec::new(),
            sparsity: x,
        };
        let mut agg: Option<Var> = None;
        let mut entropy: Option<Var> = None;
        for (attentive, ft) in &self.steps {
            let z = mode.linear(g, &attentive.fc, att);
            let z = mode.batch_norm(g, &attentive.bn, z);
            let z = g.mul(z, prior);
            let a = g.sparsemax_rows(z);
            let e = g.row_entropy(a);
            entropy = Some(entropy.map_or(e, |acc| g.add(acc, e)));
            let neg = g.scale(a, -1.0);
            let relax = g.add_scalar(neg, self.config.gamma);
            prior = g.mul(prior, relax);
            let xm = g.mul(xb, a);
            let h = ft.forward(g, mode, xm);
            let pre = g.slice_cols(h, 0, nd);
            let dec = g.relu(pre);
            agg = Some(agg.map_or(dec, |acc| g.add(acc, dec)));
            att = g.slice_cols(h, nd, nd + na);
            out.masks.push(a);
            out.mask_inputs.push(z);
            out.decisions.push(dec);
            out.decision_inputs.push(pre);
        }
        out.scores = mode.linear(g, &self.head, agg.expect("at least one step"));
        out.sparsity = g.scale(entropy.expect("at least one step"), 1.0 / self.steps.len() as f64);
        out
    }

    /// Per-document importance `Σ_s η_s · a_s` and support union, both
    /// `[docs, d]`, from an evaluation-mode pass.
    pub fn explain(&self, features: &Tensor) -> Result<(Tensor, Tensor)> {
        check_width(features, self.d)?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let f = self.forward(&mut g, &mut Mode::Eval(&self.store), x);
        let (n, d) = (features.rows(), self.d);
        let mut importance = Tensor::zeros(n, d);
        let mut support = Tensor::zeros(n, d);
        for (&a, &dec) in f.masks.iter().zip(&f.decisions) {
            let a = g.value(a);
            let dec = g.value(dec);
            ensure_finite(a, "attention masks")?;
            for r in 0..n {
                let eta: f64 = dec.row_slice(r).iter().sum();
                for (j, &v) in a.row_slice(r).iter().enumerate() {
                    importance.data_mut()[r * d + j] += eta * v;
                    if v > 0.0 {
                        support.data_mut()[r * d + j] = 1.0;
                    }
                }
            }
        }
        Ok((importance, support))
    }

    /// Aggregate importance (normalized to sum 1) and the share of documents
    /// whose support union contains each feature.
    pub fn importance_and_support(&self, dataset: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.d;
        let parts: Vec<(Vec<f64>, Vec<f64>)> = dataset
            .groups
            .par_iter()
            .map(|g| {
                let (imp, sup) = self.explain(&g.features)?;
                let mut a = vec![0.0; d];
                let mut b = vec![0.0; d];
                for r in 0..imp.rows() {
                    for j in 0..d {
                        a[j] += imp.get(r, j);
                        b[j] += sup.get(r, j);
                    }
                }
                Ok((a, b))
            })
            .collect::<Result<_>>()?;
        let mut importance = vec![0.0; d];
        let mut support = vec![0.0; d];
        for (a, b) in parts {
            for j in 0..d {
                importance[j] += a[j];
                support[j] += b[j];
            }
        }
        let total: f64 = importance.iter().sum();
        if total > 0.0 {
            importance.iter_mut().for_each(|v| *v /= total);
        }
        let docs = dataset.num_documents() as f64;
        support.iter_mut().for_each(|v| *v /= docs);
        Ok((importance, support))
    }

    /// Importance as the ranking vector; features in any document's support
    /// union as the selection.
    pub fn extract_selection(&self, train: &Dataset) -> Result<Selection> {
        let (values, support) = self.importance_and_support(train)?;
        Ok(Selection {
            kind: SelectionKind::Importance,
            values,
            selected: selected_indices(&support, None),
        })
    }
}

impl Model for TabNet {
    fn input_width(&self) -> usize {
        self.d
    }

    fn train_step(&mut self, group: &QueryGroup, _tau: f64, _rng: &mut RngState) -> Result<f64> {
        check_width(&group.features, self.d)?;
        let mut g = Graph::new();
        let x = g.constant(group.features.clone());
        let mut store = std::mem::take(&mut self.store);
        let f = self.forward(&mut g, &mut Mode::Train(&mut store), x);
        self.store = store;
        let ce = g.listwise_ce(f.scores, &group.labels_f64());
        let reg = g.scale(f.sparsity, self.config.lambda_sparse);
        let loss = g.add(ce, reg);
        optimize(&g, loss, &mut self.store, &mut self.optimizer)
    }

    fn score(&self, features: &Tensor) -> Result<Vec<f64>> {
        check_width(features, self.d)?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let f = self.forward(&mut g, &mut Mode::Eval(&self.store), x);
        Ok(column_values(&g, f.scores))
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
}
