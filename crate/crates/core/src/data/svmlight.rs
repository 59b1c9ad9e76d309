use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use fsltr_tensor::Tensor;

use super::{Dataset, QueryGroup, Split, MAX_LABEL};
use crate::error::{CoreError, Result};

#[derive(Clone, Copy, Debug)]
pub struct ParseOptions {
    /// Fixes the feature width instead of inferring it from the largest index.
    pub num_features: Option<usize>,
    pub split: Split,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            num_features: None,
            split: Split::Train,
        }
    }
}

/// Largest accepted feature index.
pub const MAX_FEATURES: usize = 1 << 16;

struct Doc {
    label: u8,
    features: Vec<(usize, f64)>,
}

fn parse_error(line: usize, message: impl Into<String>) -> CoreError {
    CoreError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses LETOR-style text: `<label> qid:<id> <idx>:<value> ... [# comment]`.
///
/// Documents are grouped by query id in order of first appearance. Feature
/// indices are 1-based and absent indices are zero.
pub fn parse_svmlight(text: &str, options: ParseOptions) -> Result<Dataset> {
    let mut order: Vec<u64> = Vec::new();
    let mut groups: HashMap<u64, Vec<Doc>> = HashMap::new();
    let mut max_index = 0usize;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: i64 = label_tok
            .parse()
            .map_err(|_| parse_error(line_no, format!("invalid label {label_tok:?}")))?;
        if !(0..=MAX_LABEL as i64).contains(&label) {
            return Err(parse_error(line_no, format!("label {label} outside 0..={MAX_LABEL}")));
        }
        let qid_tok = tokens
            .next()
            .ok_or_else(|| parse_error(line_no, "missing qid"))?;
        let qid: u64 = qid_tok
            .strip_prefix("qid:")
            .ok_or_else(|| parse_error(line_no, format!("expected qid:<id>, found {qid_tok:?}")))?
            .parse()
            .map_err(|_| parse_error(line_no, format!("invalid query id {qid_tok:?}")))?;

        let mut features: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(line_no, format!("expected <index>:<value>, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(line_no, format!("invalid feature index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_error(line_no, "feature indices are 1-based"));
            }
            if idx > MAX_FEATURES {
                return Err(parse_error(line_no, format!("feature index {idx} exceeds {MAX_FEATURES}")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_error(line_no, format!("invalid feature value {val:?}")))?;
            if !val.is_finite() {
                return Err(parse_error(line_no, format!("non-finite value for feature {idx}")));
            }
            if let Some(d) = options.num_features {
                if idx > d {
                    return Err(parse_error(
                        line_no,
                        format!("feature index {idx} exceeds width {d}"),
                    ));
                }
            }
            if features.iter().any(|&(j, _)| j + 1 == idx) {
                return Err(parse_error(line_no, format!("duplicate feature index {idx}")));
            }
            max_index = max_index.max(idx);
            features.push((idx - 1, val));
        }

        groups
            .entry(qid)
            .or_insert_with(|| {
                order.push(qid);
                Vec::new()
            })
            .push(Doc {
                label: label as u8,
                features,
            });
    }

    if order.is_empty() {
        return Err(CoreError::NoQueries);
    }
    let d = options.num_features.unwrap_or(max_index);
    let mut out = Vec::with_capacity(order.len());
    for qid in order {
        let docs = groups.remove(&qid).expect("group recorded");
        let mut data = vec![0.0; docs.len() * d];
        for (r, doc) in docs.iter().enumerate() {
            for &(j, v) in &doc.features {
                data[r * d + j] = v;
            }
        }
        let labels = docs.iter().map(|doc| doc.label).collect();
        out.push(QueryGroup::new(qid, Tensor::matrix(docs.len(), d, data)?, labels)?);
    }
    Dataset::new(out, d, options.split)
}

pub fn read_svmlight(path: impl AsRef<Path>, options: ParseOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::from(e).in_file(path))?;
    parse_svmlight(&text, options).map_err(|e| e.in_file(path))
}

/// Writes every feature explicitly, using the shortest decimal that parses
/// back to the same value.
pub fn write_svmlight(dataset: &Dataset) -> String {
    let mut out = String::new();
    for group in &dataset.groups {
        for (r, &label) in group.labels.iter().enumerate() {
            write!(out, "{label} qid:{}", group.query_id).unwrap();
            for (j, v) in group.features.row_slice(r).iter().enumerate() {
                write!(out, " {}:{v:?}", j + 1).unwrap();
            }
            out.push('\n');
        }
    }
    out
}
