//! Query-grouped ranking data: parsing, transforms, feature costs and a
//! synthetic generator with planted informative features.

mod cost;
mod svmlight;
mod synthetic;
mod transform;

use fsltr_tensor::Tensor;
use serde::{Deserialize, Serialize};

pub use cost::{cost_of_selection, parse_cost_csv, read_cost_csv, FeatureCostTable};
pub use svmlight::{parse_svmlight, read_svmlight, write_svmlight, ParseOptions, MAX_FEATURES};
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticSpec};
pub use transform::{log1p_signed, transform_log1p, Standardizer, Transform};

use crate::error::{invalid, Result};

/// Highest relevance grade accepted.
pub const MAX_LABEL: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// The documents of one query.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryGroup {
    pub query_id: u64,
    /// `[docs, features]`.
    pub features: Tensor,
    pub labels: Vec<u8>,
}

impl QueryGroup {
    pub fn new(query_id: u64, features: Tensor, labels: Vec<u8>) -> Result<Self> {
        if features.shape().len() != 2 || features.rows() != labels.len() {
            return Err(invalid(format!(
                "query {query_id}: feature shape {:?} vs {} labels",
                features.shape(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(invalid(format!("query {query_id} has no documents")));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > MAX_LABEL) {
            return Err(invalid(format!("query {query_id}: label {bad} outside 0..={MAX_LABEL}")));
        }
        Ok(Self {
            query_id,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| l as f64).collect()
    }

    pub fn has_relevant(&self) -> bool {
        self.labels.iter().any(|&l| l > 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub groups: Vec<QueryGroup>,
    pub num_features: usize,
    pub split: Split,
    /// Transforms applied so far, in order.
    pub transforms: Vec<Transform>,
}

impl Dataset {
    pub fn new(groups: Vec<QueryGroup>, num_features: usize, split: Split) -> Result<Self> {
        if groups.is_empty() {
            return Err(crate::error::CoreError::NoQueries);
        }
        if let Some(g) = groups.iter().find(|g| g.features.cols() != num_features) {
            return Err(invalid(format!(
                "query {} has {} features, dataset has {num_features}",
                g.query_id,
                g.features.cols()
            )));
        }
        Ok(Self {
            groups,
            num_features,
            split,
            transforms: Vec::new(),
        })
    }

    pub fn num_documents(&self) -> usize {
        self.groups.iter().map(QueryGroup::len).sum()
    }

    /// Keeps only the listed feature columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Dataset> {
        if let Some(&c) = columns.iter().find(|&&c| c >= self.num_features) {
            return Err(invalid(format!("feature {c} out of range")));
        }
        let groups = self
            .groups
            .iter()
            .map(|g| {
                let n = g.len();
                let mut data = Vec::with_capacity(n * columns.len());
                for r in 0..n {
                    let row = g.features.row_slice(r);
                    data.extend(columns.iter().map(|&c| row[c]));
                }
                QueryGroup {
                    query_id: g.query_id,
                    features: Tensor::matrix(n, columns.len(), data).unwrap(),
                    labels: g.labels.clone(),
                }
            })
            .collect();
        Ok(Dataset {
            groups,
            num_features: columns.len(),
            split: self.split,
            transforms: self.transforms.clone(),
        })
    }

    /// Zeroes every feature whose mask entry is false.
    pub fn mask_features(&self, mask: &[bool]) -> Result<Dataset> {
        if mask.len() != self.num_features {
            return Err(invalid(format!(
                "mask has {} entries, dataset has {} features",
                mask.len(),
                self.num_features
            )));
        }
        let mut out = self.clone();
        let d = self.num_features;
        for g in &mut out.groups {
            for (i, v) in g.features.data_mut().iter_mut().enumerate() {
                if !mask[i % d] {
                    *v *= 0.0;
                }
            }
        }
        Ok(out)
    }
}

/// Train, validation and test splits sharing a feature width.
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
}

impl Splits {
    pub fn num_features(&self) -> usize {
        self.train.num_features
    }

    pub fn map(&self, f: impl Fn(&Dataset) -> Result<Dataset>) -> Result<Splits> {
        Ok(Splits {
            train: f(&self.train)?,
            valid: f(&self.valid)?,
            test: f(&self.test)?,
        })
    }
}
