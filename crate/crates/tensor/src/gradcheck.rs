//! Central finite-difference check of reverse-mode gradients.

use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for the relative error, so that gradients that are
/// zero up to round-off are judged on absolute error instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Flat index of the coordinate with the largest relative error.
    pub worst_index: usize,
    pub passed: bool,
}

/// Compares the gradient of the scalar built by `f` at `point` against
/// central differences with step [`FD_STEP`].
pub fn grad_check<F>(f: F, point: &Tensor, tolerance: f64) -> GradCheckReport
where
    F: Fn(&mut Graph, Var) -> Var,
{
    let mut g = Graph::new();
    let x = g.input(point.clone());
    let y = f(&mut g, x);
    let grads = g.backward(y).expect("scalar output");
    let analytic = grads
        .get(x)
        .cloned()
        .unwrap_or_else(|| Tensor::zeros_like(point));

    let eval = |p: Tensor| {
        let mut g = Graph::new();
        let x = g.constant(p);
        let y = f(&mut g, x);
        g.value(y).item()
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst_index: 0,
        passed: true,
    };
    for i in 0..point.len() {
        let mut plus = point.clone();
        plus.data_mut()[i] += FD_STEP;
        let mut minus = point.clone();
        minus.data_mut()[i] -= FD_STEP;
        let numeric = (eval(plus) - eval(minus)) / (2.0 * FD_STEP);
        let a = analytic.data()[i];
        let abs = (a - numeric).abs();
        let rel = abs / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
        if !rel.is_finite() || rel > report.max_rel_error {
            report.max_rel_error = if rel.is_finite() { rel } else { f64::INFINITY };
            report.worst_index = i;
        }
        report.max_abs_error = report.max_abs_error.max(abs);
    }
    report.passed = report.max_rel_error <= tolerance;
    report
}
