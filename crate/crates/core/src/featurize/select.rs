use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 || x.iter().all(|&v| v == x[0]) {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of the t-test for a Pearson correlation with n−2 dof.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Keeps the columns whose univariate correlation with `targets` is
/// significant at level `alpha`. Constant columns are always dropped.
pub fn select_features(train: &Matrix, targets: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if train.rows() != targets.len() {
        return Err(Error::config(format!(
            "{} rows but {} targets",
            train.rows(),
            targets.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha {alpha} must lie in (0, 1)")));
    }
    let n = targets.len();
    if n < 3 {
        return Err(Error::data(format!(
            "feature selection needs at least 3 rows, got {n}"
        )));
    }
    if targets.iter().all(|&t| t == targets[0]) {
        return Err(Error::data(
            "feature selection targets are constant (training data holds one class)",
        ));
    }
    Ok((0..train.cols())
        .map(|c| match pearson(&train.column_values(c), targets) {
            Some(r) => correlation_p_value(r, n) < alpha,
            None => false,
        })
        .collect())
}
