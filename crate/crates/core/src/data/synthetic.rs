use fsltr_tensor::{RngState, Tensor};
use serde::{Deserialize, Serialize};

use super::{Dataset, QueryGroup, Split, Splits, MAX_LABEL};
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub num_features: usize,
    pub informative: usize,
    pub train_queries: usize,
    pub valid_queries: usize,
    pub test_queries: usize,
    pub docs_per_query: usize,
    pub label_levels: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_features: 50,
            informative: 5,
            train_queries: 200,
            valid_queries: 50,
            test_queries: 50,
            docs_per_query: 20,
            label_levels: 5,
            noise: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.num_features == 0 {
            problems.push("num_features must be >= 1".to_string());
        }
        if self.informative == 0 || self.informative > self.num_features {
            problems.push(format!(
                "informative must be in 1..={}, got {}",
                self.num_features, self.informative
            ));
        }
        if self.train_queries == 0 || self.valid_queries == 0 || self.test_queries == 0 {
            problems.push("every split needs at least one query".to_string());
        }
        if self.docs_per_query == 0 {
            problems.push("docs_per_query must be >= 1".to_string());
        }
        if self.label_levels == 0 || self.label_levels > MAX_LABEL as usize + 1 {
            problems.push(format!("label_levels must be in 1..={}", MAX_LABEL + 1));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            problems.push("noise must be finite and >= 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(invalid(problems.join("; ")))
        }
    }
}

/// Hidden relevance function over the informative features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenScore {
    pub features: Vec<usize>,
    pub weights: Vec<f64>,
    /// Coefficient of the product of the first two informative features.
    pub interaction: f64,
}

impl HiddenScore {
    pub fn eval(&self, row: &[f64]) -> f64 {
        let linear: f64 = self
            .features
            .iter()
            .zip(&self.weights)
            .map(|(&j, w)| w * row[j])
            .sum();
        let pair = match self.features.as_slice() {
            [a, b, ..] => self.interaction * row[*a] * row[*b],
            _ => 0.0,
        };
        linear + pair
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub splits: Splits,
    /// Planted informative features, ascending.
    pub informative: Vec<usize>,
    pub hidden: HiddenScore,
}

/// Draws standard-normal features and bins a hidden score into per-query
/// quantile labels. Only the informative features carry label information.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = RngState::new(spec.seed);
    let mut informative = rng.choose_distinct(spec.num_features, spec.informative);
    informative.sort_unstable();
    let weights = informative
        .iter()
        .map(|_| {
            let magnitude = rng.uniform_range(0.5, 1.5);
            if rng.bernoulli(0.5) {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();
    let hidden = HiddenScore {
        features: informative.clone(),
        weights,
        interaction: 1.0,
    };

    let mut next_qid = 1u64;
    let mut make = |count: usize, split: Split, rng: &mut RngState| -> Result<Dataset> {
        let groups = (0..count)
            .map(|_| {
                let qid = next_qid;
                next_qid += 1;
                make_query(spec, &hidden, qid, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(groups, spec.num_features, split)
    };
    let train = make(spec.train_queries, Split::Train, &mut rng)?;
    let valid = make(spec.valid_queries, Split::Valid, &mut rng)?;
    let test = make(spec.test_queries, Split::Test, &mut rng)?;
    Ok(SyntheticData {
        splits: Splits { train, valid, test },
        informative,
        hidden,
    })
}

fn make_query(spec: &SyntheticSpec, hidden: &HiddenScore, qid: u64, rng: &mut RngState) -> Result<QueryGroup> {
    let (n, d) = (spec.docs_per_query, spec.num_features);
    let data: Vec<f64> = (0..n * d).map(|_| rng.normal()).collect();
    let scores: Vec<f64> = (0..n)
        .map(|r| hidden.eval(&data[r * d..(r + 1) * d]) + spec.noise * rng.normal())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let levels = spec.label_levels;
    let mut labels = vec![0u8; n];
    for (rank, &doc) in order.iter().enumerate() {
        labels[doc] = (((rank + 1) * levels).div_ceil(n) - 1) as u8;
    }
    QueryGroup::new(qid, Tensor::matrix(n, d, data)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            num_features: 10,
            informative: 3,
            train_queries: 4,
            valid_queries: 2,
            test_queries: 2,
            docs_per_query: 10,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn rejects_too_many_informative() {
        let spec = SyntheticSpec {
            informative: 11,
            ..small()
        };
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn shapes_and_labels() {
        let data = generate_synthetic(&small()).unwrap();
        assert_eq!(data.informative.len(), 3);
        assert!(data.informative.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(data.splits.train.groups.len(), 4);
        for g in &data.splits.train.groups {
            let mut counts = [0usize; 5];
            g.labels.iter().for_each(|&l| counts[l as usize] += 1);
            assert_eq!(counts, [2; 5]);
        }
        let qids: Vec<u64> = data
            .splits
            .train
            .groups
            .iter()
            .chain(&data.splits.test.groups)
            .map(|g| g.query_id)
            .collect();
        let mut unique = qids.clone();
        unique.dedup();
        assert_eq!(unique.len(), qids.len());
    }

    #[test]
    fn single_document_gets_top_bin() {
        let spec = SyntheticSpec {
            docs_per_query: 1,
            noise: 0.0,
            ..small()
        };
        let data = generate_synthetic(&spec).unwrap();
        assert!(data.splits.train.groups.iter().all(|g| g.labels == vec![4]));
    }

    #[test]
    fn labels_follow_hidden_score_without_noise() {
        let spec = SyntheticSpec {
            noise: 0.0,
            ..small()
        };
        let data = generate_synthetic(&spec).unwrap();
        for g in &data.splits.train.groups {
            let s: Vec<f64> = (0..g.len()).map(|r| data.hidden.eval(g.features.row_slice(r))).collect();
            for a in 0..g.len() {
                for b in 0..g.len() {
                    if s[a] > s[b] {
                        assert!(g.labels[a] >= g.labels[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_by_seed() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        assert_eq!(a.splits.train, b.splits.train);
        let c = generate_synthetic(&SyntheticSpec { seed: 1, ..small() }).unwrap();
        assert_ne!(a.splits.train, c.splits.train);
    }
}
