use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoreError, Result};

/// Nonnegative retrieval cost per feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureCostTable {
    costs: Vec<f64>,
}

impl FeatureCostTable {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if let Some((j, c)) = costs.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c >= 0.0)) {
            return Err(invalid(format!("feature {}: cost {c} must be finite and >= 0", j + 1)));
        }
        Ok(Self { costs })
    }

    pub fn uniform(d: usize) -> Self {
        Self { costs: vec![1.0; d] }
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }
}

/// Parses `feature_index,cost` rows (1-based indices, optional header).
///
/// Features not listed cost 1.0; their indices are returned so callers can
/// warn about them.
pub fn parse_cost_csv(text: &str, d: usize) -> Result<(FeatureCostTable, Vec<usize>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut costs: Vec<Option<f64>> = vec![None; d];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        let err = |message: String| CoreError::Parse { line, message };
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(err(format!("expected 2 fields, found {}", record.len())));
        }
        let index: usize = match record[0].parse() {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(_) => return Err(err(format!("invalid feature index {:?}", &record[0]))),
        };
        if index == 0 || index > d {
            return Err(err(format!("feature index {index} outside 1..={d}")));
        }
        let cost: f64 = record[1]
            .parse()
            .map_err(|_| err(format!("invalid cost {:?}", &record[1])))?;
        if !cost.is_finite() || cost < 0.0 {
            return Err(err(format!("cost {cost} must be finite and >= 0")));
        }
        if costs[index - 1].replace(cost).is_some() {
            return Err(err(format!("duplicate feature index {index}")));
        }
    }
    let missing: Vec<usize> = (0..d).filter(|&j| costs[j].is_none()).collect();
    let table = FeatureCostTable {
        costs: costs.into_iter().map(|c| c.unwrap_or(1.0)).collect(),
    };
    Ok((table, missing))
}

pub fn read_cost_csv(path: impl AsRef<Path>, d: usize) -> Result<FeatureCostTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::from(e).in_file(path))?;
    let (table, missing) = parse_cost_csv(&text, d).map_err(|e| e.in_file(path))?;
    if !missing.is_empty() {
        log::warn!(
            "{}: {} of {d} features have no cost entry and default to 1.0",
            path.display(),
            missing.len()
        );
    }
    Ok(table)
}

pub fn cost_of_selection(mask: &[bool], costs: &FeatureCostTable) -> Result<f64> {
    if mask.len() != costs.len() {
        return Err(invalid(format!(
            "mask has {} entries, cost table has {}",
            mask.len(),
            costs.len()
        )));
    }
    Ok(mask
        .iter()
        .zip(&costs.costs)
        .filter(|(m, _)| **m)
        .map(|(_, c)| c)
        .sum())
}
