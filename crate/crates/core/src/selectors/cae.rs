use fsltr_tensor::functional::{argmax, concrete_relaxation, softmax};
use fsltr_tensor::optim::{AdamConfig, AdamState};
use fsltr_tensor::{Graph, ParamId, ParamStore, RngState, Tensor};

use super::common::{check_tau, ensure_finite, gumbel_noise};
use crate::data::QueryGroup;
use crate::error::{invalid, Result};
use crate::layers::{check_width, column_values, Mlp, Mode};
use crate::model::{optimize, Model, Selection, SelectionKind};

/// Encodes `x` through `k` concrete samples, one per row of `logits`.
pub fn cae_encode(x: &[f64], logits: &Tensor, tau: f64, rng: &mut RngState) -> Result<Vec<f64>> {
    let noise = gumbel_noise(rng, logits.rows(), logits.cols());
    cae_encode_with_noise(x, logits, &noise, tau)
}

pub fn cae_encode_with_noise(x: &[f64], logits: &Tensor, noise: &Tensor, tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    if logits.cols() != x.len() || noise.shape() != logits.shape() {
        return Err(invalid(format!(
            "logits {:?}, noise {:?}, input width {}",
            logits.shape(),
            noise.shape(),
            x.len()
        )));
    }
    (0..logits.rows())
        .map(|j| {
            let c = concrete_relaxation(logits.row_slice(j), noise.row_slice(j), tau)?;
            Ok(c.iter().zip(x).map(|(a, b)| a * b).sum())
        })
        .collect()
}

/// `k` learnable rows of logits, each picking one input feature; the ranker
/// sees the `k` encoded values.
#[derive(Clone, Debug)]
pub struct Cae {
    pub store: ParamStore,
    /// `[k, d]`.
    pub logits: ParamId,
    pub ranker: Mlp,
    pub k: usize,
    pub optimizer: AdamState,
}

impl Cae {
    pub fn new(d: usize, k: usize, widths: &[usize], adam: AdamConfig, rng: &mut RngState) -> Result<Cae> {
        if k == 0 || d == 0 {
            return Err(invalid("encoder needs k >= 1 and d >= 1"));
        }
        let mut store = ParamStore::new();
        let init = (0..k * d).map(|_| 0.01 * rng.normal()).collect();
        let logits = store.add("encoder.logits", Tensor::matrix(k, d, init)?);
        let ranker = Mlp::new(&mut store, "ranker", k, widths, 1, rng);
        Ok(Cae {
            store,
            logits,
            ranker,
            k,
            optimizer: AdamState::new(adam),
        })
    }

    pub fn num_features(&self) -> usize {
        self.store.value(self.logits).cols()
    }

    /// Feature chosen by each row; duplicates are possible.
    pub fn row_choices(&self) -> Result<Vec<usize>> {
        let l = self.store.value(self.logits);
        ensure_finite(l, "encoder logits")?;
        Ok((0..l.rows()).map(|j| argmax(l.row_slice(j))).collect())
    }

    /// One-hot rows at each row's argmax, `[k, d]`.
    pub fn hard_encoder(&self) -> Result<Tensor> {
        let d = self.num_features();
        let mut t = Tensor::zeros(self.k, d);
        for (j, c) in self.row_choices()?.into_iter().enumerate() {
            t.data_mut()[j * d + c] = 1.0;
        }
        Ok(t)
    }

    fn score_encoded(&self, features: &Tensor, encoder: Tensor) -> Result<Vec<f64>> {
        check_width(features, self.num_features())?;
        let mut g = Graph::new();
        let x = g.constant(features.clone());
        let c = g.constant(encoder);
        let ct = g.transpose(c);
        let enc = g.matmul(x, ct);
        let s = self.ranker.forward(&mut g, &mut Mode::Eval(&self.store), enc);
        Ok(column_values(&g, s))
    }

    /// Union of row argmaxes. The ranking vector is each feature's argmax
    /// count plus a tie-breaking share of its summed row probabilities.
    pub fn extract_selection(&self) -> Result<Selection> {
        let choices = self.row_choices()?;
        let l = self.store.value(self.logits);
        let d = l.cols();
        let mut values = vec![0.0; d];
        for &c in &choices {
            values[c] += 1.0;
        }
        for j in 0..l.rows() {
            for (v, p) in values.iter_mut().zip(softmax(l.row_slice(j))?) {
                *v += p / (self.k + 1) as f64;
            }
        }
        let mut selected = choices;
        selected.sort_unstable();
        selected.dedup();
        Ok(Selection {
            kind: SelectionKind::Importance,
            values,
            selected,
        })
    }
}

impl Model for Cae {
    fn input_width(&self) -> usize {
        self.num_features()
    }

    fn train_step(&mut self, group: &QueryGroup, tau: f64, rng: &mut RngState) -> Result<f64> {
        check_width(&group.features, self.num_features())?;
        check_tau(tau)?;
        let mut g = Graph::new();
        let x = g.constant(group.features.clone());
        let zeta = g.param(&self.store, self.logits);
        let noise = gumbel_noise(rng, self.k, self.num_features());
        let c = g.concrete(zeta, noise, tau);
        let ct = g.transpose(c);
        let enc = g.matmul(x, ct);
        let s = self.ranker.forward(&mut g, &mut Mode::Train(&mut self.store), enc);
        let loss = g.listwise_ce(s, &group.labels_f64());
        optimize(&g, loss, &mut self.store, &mut self.optimizer)
    }

    fn score(&self, features: &Tensor) -> Result<Vec<f64>> {
        let enc = self.hard_encoder()?;
        self.score_encoded(features, enc)
    }

    fn score_sampled(&self, features: &Tensor, tau: f64, rng: &mut RngState) -> Result<Vec<f64>> {
        check_tau(tau)?;
        let l = self.store.value(self.logits);
        let noise = gumbel_noise(rng, l.rows(), l.cols());
        let mut g = Graph::new();
        let z = g.constant(l.clone());
        let c = g.concrete(z, noise, tau);
        let enc = g.value(c).clone();
        self.score_encoded(features, enc)
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
}
