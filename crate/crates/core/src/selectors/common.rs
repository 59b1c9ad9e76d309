use fsltr_tensor::functional::{concrete_relaxation, top_k};
use fsltr_tensor::rng::sample_gumbel;
use fsltr_tensor::{Graph, RngState, Tensor, Var};
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{invalid, CoreError, Result};

/// Default count threshold, relative to the largest entry.
pub const RELATIVE_COUNT_THRESHOLD: f64 = 1e-6;

pub fn apply_mask(x: &[f64], mask: &[f64]) -> Result<Vec<f64>> {
    if x.len() != mask.len() {
        return Err(invalid(format!("{} features vs {} mask entries", x.len(), mask.len())));
    }
    Ok(x.iter().zip(mask).map(|(a, m)| a * m).collect())
}

pub fn check_budget(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(invalid(format!("budget k = {k} must be in 1..={d}")));
    }
    Ok(())
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid(format!("temperature must be finite and > 0, got {tau}")));
    }
    Ok(())
}

pub fn gumbel_noise(rng: &mut RngState, rows: usize, cols: usize) -> Tensor {
    Tensor::matrix(rows, cols, sample_gumbel(rng, rows * cols)).unwrap()
}

/// Elementwise max of `k` independent row-wise concrete samples.
pub fn relaxed_top_k(g: &mut Graph, logits: Var, k: usize, tau: f64, rng: &mut RngState) -> Var {
    let (rows, cols) = (g.value(logits).rows(), g.value(logits).cols());
    let samples: Vec<Var> = (0..k)
        .map(|_| {
            let noise = gumbel_noise(rng, rows, cols);
            g.concrete(logits, noise, tau)
        })
        .collect();
    g.max(&samples)
}

/// The relaxed top-k mask for one logit vector with explicit noise, one
/// noise vector per draw.
pub fn max_concrete(logits: &[f64], noise: &[Vec<f64>], tau: f64) -> Result<Vec<f64>> {
    check_budget(noise.len(), logits.len())?;
    check_tau(tau)?;
    let mut out = vec![0.0f64; logits.len()];
    for draw in noise {
        let c = concrete_relaxation(logits, draw, tau)?;
        for (o, v) in out.iter_mut().zip(c) {
            *o = o.max(v);
        }
    }
    Ok(out)
}

/// Number of entries strictly above `threshold`, which defaults to a tiny
/// fraction of the largest entry. An all-zero vector counts zero.
pub fn measure_selected_count(values: &[f64], threshold: Option<f64>) -> usize {
    selected_indices(values, threshold).len()
}

pub fn selected_indices(values: &[f64], threshold: Option<f64>) -> Vec<usize> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let t = threshold.unwrap_or(RELATIVE_COUNT_THRESHOLD * max);
    (0..values.len()).filter(|&j| values[j] > t).collect()
}

/// `1` at the `k` largest entries of each row.
pub(crate) fn hard_top_k_rows(logits: &Tensor, k: usize) -> Tensor {
    let (n, d) = (logits.rows(), logits.cols());
    let mut out = Tensor::zeros(n, d);
    for r in 0..n {
        for j in top_k(logits.row_slice(r), k) {
            out.data_mut()[r * d + j] = 1.0;
        }
    }
    out
}

pub(crate) fn ensure_finite(t: &Tensor, what: &str) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(CoreError::InvalidState(format!("{what} contain non-finite values")))
    }
}

/// Share of documents in `dataset` on which each feature is selected by
/// the per-document hard masks from `masks`.
pub(crate) fn selection_frequency<F>(dataset: &Dataset, masks: F) -> Result<Vec<f64>>
where
    F: Fn(&Tensor) -> Result<Tensor> + Sync,
{
    let d = dataset.num_features;
    let counts: Vec<Vec<f64>> = dataset
        .groups
        .par_iter()
        .map(|g| {
            let m = masks(&g.features)?;
            let mut c = vec![0.0; d];
            for r in 0..m.rows() {
                for (acc, v) in c.iter_mut().zip(m.row_slice(r)) {
                    if *v > 0.0 {
                        *acc += 1.0;
                    }
                }
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let total = dataset.num_documents() as f64;
    let mut freq = vec![0.0; d];
    for c in counts {
        for (f, v) in freq.iter_mut().zip(c) {
            *f += v;
        }
    }
    freq.iter_mut().for_each(|f| *f /= total);
    Ok(freq)
}
