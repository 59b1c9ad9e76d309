//! Slice-level forward kernels shared by the graph ops and the public API.

use crate::error::{invalid, Result};

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(invalid("softmax of empty vector"));
    }
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    Ok(out)
}

pub(crate) fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(invalid("log_softmax of empty vector"));
    }
    let lse = log_sum_exp(logits);
    Ok(logits.iter().map(|z| z - lse).collect())
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Euclidean projection onto the probability simplex.
pub fn sparsemax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(invalid("sparsemax of empty vector"));
    }
    let mut out = vec![0.0; logits.len()];
    sparsemax_into(logits, &mut out);
    Ok(out)
}

/// Threshold τ such that `max(z - τ, 0)` sums to one.
pub fn sparsemax_threshold(z: &[f64]) -> f64 {
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut support_sum = sorted[0];
    let mut support = 1usize;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let k = (i + 1) as f64;
        if 1.0 + k * v > cumsum {
            support = i + 1;
            support_sum = cumsum;
        }
    }
    (support_sum - 1.0) / support as f64
}

pub(crate) fn sparsemax_into(z: &[f64], out: &mut [f64]) {
    // Working relative to the max makes `sparsemax(z + c) == sparsemax(z)`
    // bit-for-bit whenever the shift itself is exact.
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let centered: Vec<f64> = z.iter().map(|v| v - max).collect();
    let tau = sparsemax_threshold(&centered);
    for (o, &v) in out.iter_mut().zip(&centered) {
        *o = (v - tau).max(0.0);
    }
}

/// Gumbel-softmax sample `softmax((log_probs + gumbel) / tau)`.
///
/// `log_probs` may be unnormalized; the result is invariant to a shared shift.
pub fn concrete_relaxation(log_probs: &[f64], gumbel: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(invalid(format!("temperature must be positive, got {tau}")));
    }
    if log_probs.len() != gumbel.len() {
        return Err(invalid(format!(
            "log_probs has {} entries but gumbel has {}",
            log_probs.len(),
            gumbel.len()
        )));
    }
    let perturbed: Vec<f64> = log_probs
        .iter()
        .zip(gumbel)
        .map(|(l, g)| (l + g) / tau)
        .collect();
    softmax(&perturbed)
}

/// Index of the first maximum.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate() {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Indices of the `k` largest entries, ties broken by ascending index.
pub fn top_k(xs: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn softmax_examples() {
        assert!(close(&softmax(&[0.0, 0.0]).unwrap(), &[0.5, 0.5], 1e-15));
        assert_eq!(softmax(&[-123.4]).unwrap(), vec![1.0]);
        // e/(e+1) = 0.7310585786300049
        assert!(close(
            &softmax(&[1.0, 0.0]).unwrap(),
            &[0.731_058_578_630_004_9, 0.268_941_421_369_995_1],
            1e-15
        ));
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let p = softmax(&[1000.0, 999.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparsemax_examples() {
        assert_eq!(sparsemax(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert!(close(&sparsemax(&[0.1, 0.1, 0.1]).unwrap(), &[1.0 / 3.0; 3], 1e-15));
        assert_eq!(sparsemax(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(sparsemax_threshold(&[2.0, 0.0]), 1.0);
        assert!(sparsemax(&[]).is_err());
    }

    #[test]
    fn concrete_examples() {
        let half = 0.5f64.ln();
        for tau in [0.1, 1.0, 10.0] {
            let c = concrete_relaxation(&[half, half], &[0.0, 0.0], tau).unwrap();
            assert!(close(&c, &[0.5, 0.5], 1e-15));
        }
        let c = concrete_relaxation(&[1.0, 0.0], &[0.0, 0.0], 1.0).unwrap();
        assert!(close(&c, &softmax(&[1.0, 0.0]).unwrap(), 1e-15));
        assert!(concrete_relaxation(&[0.0], &[0.0], 0.0).is_err());
        assert!(concrete_relaxation(&[0.0], &[0.0], -1.0).is_err());
        assert!(concrete_relaxation(&[0.0, 1.0], &[0.0], 1.0).is_err());
    }

    #[test]
    fn top_k_breaks_ties_by_index() {
        assert_eq!(top_k(&[1.0, 3.0, 3.0, 2.0], 2), vec![1, 2]);
        assert_eq!(top_k(&[0.5, 2.0, 1.0], 2), vec![1, 2]);
        assert_eq!(argmax(&[1.0, 5.0, 5.0]), 1);
    }
}
