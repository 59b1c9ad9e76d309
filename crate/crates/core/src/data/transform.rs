use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Log1p,
    Standardize,
}

/// `sign(v) * ln(1 + |v|)`.
pub fn log1p_signed(v: f64) -> f64 {
    v.signum() * v.abs().ln_1p()
}

pub fn transform_log1p(dataset: &Dataset) -> Dataset {
    let mut out = dataset.clone();
    for g in &mut out.groups {
        for v in g.features.data_mut() {
            *v = if *v == 0.0 { *v } else { log1p_signed(*v) };
        }
    }
    out.transforms.push(Transform::Log1p);
    out
}

/// Per-feature affine map to zero mean and unit variance, fitted on one split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(dataset: &Dataset) -> Standardizer {
        let d = dataset.num_features;
        let n = dataset.num_documents() as f64;
        let mut mean = vec![0.0; d];
        for g in &dataset.groups {
            for r in 0..g.len() {
                for (m, v) in mean.iter_mut().zip(g.features.row_slice(r)) {
                    *m += v;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for g in &dataset.groups {
            for r in 0..g.len() {
                for ((s, v), m) in var.iter_mut().zip(g.features.row_slice(r)).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
        }
        let scale = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.num_features != self.mean.len() {
            return Err(invalid(format!(
                "standardizer fitted on {} features, dataset has {}",
                self.mean.len(),
                dataset.num_features
            )));
        }
        let d = dataset.num_features;
        let mut out = dataset.clone();
        for g in &mut out.groups {
            for (i, v) in g.features.data_mut().iter_mut().enumerate() {
                let j = i % d;
                *v = (*v - self.mean[j]) * self.scale[j];
            }
        }
        out.transforms.push(Transform::Standardize);
        Ok(out)
    }
}
