use super::Matrix;
use crate::error::{Error, Result};

/// Magnitudes below this are compared on an absolute rather than relative scale.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// (tensor index, flat element index) of the worst entry.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Compares an analytic gradient against central finite differences.
///
/// `f` returns the loss and its analytic gradient with the same tensor layout
/// as `params`. Each parameter is perturbed by `±eps` and the numeric estimate
/// `(f(θ+eps) − f(θ−eps)) / (2 eps)` is compared with the analytic value using
/// `|a − n| / max(|a|, |n|, GRAD_CHECK_FLOOR)`.
pub fn grad_check<F>(params: &[Matrix], eps: f64, mut f: F) -> Result<GradCheckReport>
where
    F: FnMut(&[Matrix]) -> (f64, Vec<Matrix>),
{
    if !(1e-6..=1e-4).contains(&eps) {
        return Err(Error::config(format!("grad_check eps {eps} outside [1e-6, 1e-4]")));
    }
    let (loss, analytic) = f(params);
    if !loss.is_finite() {
        return Err(Error::numerical("loss is not finite at the base point"));
    }
    if analytic.len() != params.len()
        || analytic.iter().zip(params).any(|(g, p)| !g.same_shape(p))
    {
        return Err(Error::config("analytic gradient layout does not match params"));
    }

    let mut probe = params.to_vec();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: (0, 0),
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for t in 0..params.len() {
        for k in 0..params[t].len() {
            let orig = params[t].as_slice()[k];
            probe[t].as_mut_slice()[k] = orig + eps;
            let plus = f(&probe).0;
            probe[t].as_mut_slice()[k] = orig - eps;
            let minus = f(&probe).0;
            probe[t].as_mut_slice()[k] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::numerical(format!(
                    "loss not finite when perturbing tensor {t} element {k}"
                )));
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[t].as_slice()[k];
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = (t, k);
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRAD_CHECK_FLOOR)
}
