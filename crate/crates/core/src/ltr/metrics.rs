use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, QueryGroup};
use crate::error::Result;

/// Document indices in descending score order, ties by ascending index.
pub fn ranking_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn gain(label: u8) -> f64 {
    f64::from((1u32 << label) - 1)
}

/// DCG of the first `k` entries of `labels` taken in the given order.
pub fn dcg_at_k(labels: &[u8], order: &[usize], k: usize) -> f64 {
    order
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &doc)| gain(labels[doc]) / ((i + 2) as f64).log2())
        .sum()
}

pub fn ideal_dcg_at_k(labels: &[u8], k: usize) -> f64 {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &l)| gain(l) / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG@k of `scores` against graded `labels`.
///
/// Queries without a relevant document have no defined NDCG; this returns
/// 0.0 for them and [`evaluate`] leaves them out of its means.
pub fn ndcg_at_k(scores: &[f64], labels: &[u8], k: usize) -> f64 {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let ideal = ideal_dcg_at_k(labels, k);
    if ideal == 0.0 {
        return 0.0;
    }
    (dcg_at_k(labels, &ranking_order(scores), k) / ideal).min(1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population standard deviation; zero for a single value.
    pub fn of(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean NDCG per cutoff over queries with at least one relevant document.
    pub ndcg: BTreeMap<usize, f64>,
    /// Per-query values, in dataset order, for the same queries.
    pub per_query: BTreeMap<usize, Vec<f64>>,
    pub query_ids: Vec<u64>,
    pub excluded_queries: usize,
}

impl EvalReport {
    pub fn ndcg_at(&self, k: usize) -> f64 {
        self.ndcg.get(&k).copied().unwrap_or(0.0)
    }
}

pub const DEFAULT_CUTOFFS: [usize; 2] = [1, 10];

/// Scores every query with `scorer` (in parallel) and averages NDCG.
pub fn evaluate<F>(dataset: &Dataset, cutoffs: &[usize], scorer: F) -> Result<EvalReport>
where
    F: Fn(&QueryGroup) -> Result<Vec<f64>> + Sync,
{
    let scored: Vec<Option<Vec<f64>>> = dataset
        .groups
        .par_iter()
        .map(|g| {
            if !g.has_relevant() {
                return Ok(None);
            }
            let scores = scorer(g)?;
            Ok(Some(cutoffs.iter().map(|&k| ndcg_at_k(&scores, &g.labels, k)).collect()))
        })
        .collect::<Result<_>>()?;
    let mut per_query: BTreeMap<usize, Vec<f64>> = cutoffs.iter().map(|&k| (k, Vec::new())).collect();
    let mut query_ids = Vec::new();
    let mut excluded = 0;
    for (g, values) in dataset.groups.iter().zip(scored) {
        match values {
            Some(values) => {
                query_ids.push(g.query_id);
                for (&k, v) in cutoffs.iter().zip(values) {
                    per_query.get_mut(&k).unwrap().push(v);
                }
            }
            None => excluded += 1,
        }
    }
    let ndcg = per_query
        .iter()
        .map(|(&k, vs)| {
            let mean = if vs.is_empty() { 0.0 } else { vs.iter().sum::<f64>() / vs.len() as f64 };
            (k, mean)
        })
        .collect();
    Ok(EvalReport {
        ndcg,
        per_query,
        query_ids,
        excluded_queries: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_order_is_one() {
        assert_eq!(ndcg_at_k(&[3.0, 2.0, 1.0], &[2, 1, 0], 10), 1.0);
        assert_eq!(ndcg_at_k(&[0.1, 0.9], &[0, 3], 1), 1.0);
    }

    #[test]
    fn worked_example() {
        // labels [3,1,0] ranked as (1,3,0) by label: 5.41651 / 7.63093
        let labels = [3, 1, 0];
        let dcg = dcg_at_k(&labels, &[1, 0, 2], 10);
        let idcg = ideal_dcg_at_k(&labels, 10);
        assert!((dcg - 5.416_51).abs() < 5e-6, "{dcg}");
        assert!((idcg - 7.630_93).abs() < 5e-6, "{idcg}");
        let v = ndcg_at_k(&[2.0, 3.0, 1.0], &labels, 10);
        assert_eq!(v, dcg / idcg);
        assert!((v - 0.709_81).abs() < 5e-6, "{v}");
    }

    #[test]
    fn ties_use_index_order() {
        assert_eq!(ranking_order(&[1.0, 1.0, 2.0, 1.0]), vec![2, 0, 1, 3]);
        assert_eq!(ndcg_at_k(&[0.0, 0.0], &[0, 1], 1), 0.0);
        assert_eq!(ndcg_at_k(&[0.0, 0.0], &[1, 0], 1), 1.0);
    }

    #[test]
    fn no_relevant_documents() {
        assert_eq!(ndcg_at_k(&[1.0, 2.0], &[0, 0], 10), 0.0);
    }

    #[test]
    fn mean_std() {
        assert_eq!(MeanStd::of(&[0.5]), MeanStd { mean: 0.5, std: 0.0 });
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
    }
}
