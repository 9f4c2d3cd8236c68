use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Per-column mean and (sample) standard deviation fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl ZScore {
    /// Constant columns get `sigma = 1`, so they map to 0.
    pub fn fit(train: &Matrix) -> Result<Self> {
        let n = train.rows();
        if n < 2 {
            return Err(Error::data(format!(
                "z-score normalization needs at least 2 rows, got {n}"
            )));
        }
        let nf = n as f64;
        let mut mu = vec![0.0; train.cols()];
        let mut sigma = vec![1.0; train.cols()];
        for c in 0..train.cols() {
            let col = train.column_values(c);
            let mean = col.iter().sum::<f64>() / nf;
            let first = col[0];
            mu[c] = mean;
            if col.iter().all(|&v| v == first) {
                continue;
            }
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
            sigma[c] = var.sqrt();
        }
        Ok(ZScore { mu, sigma })
    }

    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.mu.len() {
            return Err(Error::config(format!(
                "normalizer fitted on {} columns, got {}",
                self.mu.len(),
                m.cols()
            )));
        }
        let mut out = m.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.mu[c]) / self.sigma[c];
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Fits on `train` and returns the normalized matrix with its parameters.
pub fn zscore_fit_apply(train: &Matrix) -> Result<(Matrix, ZScore)> {
    let z = ZScore::fit(train)?;
    let normalized = z.apply(train)?;
    Ok((normalized, z))
}
