use crate::error::{Error, Result};

const P_CLAMP: f64 = 1e-12;

/// Binary cross-entropy with `p` clamped to `[1e-12, 1 − 1e-12]`.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// dL/dp of [`bce_loss`] (inside the clamp range).
pub fn bce_grad(p: f64, y: f64) -> f64 {
    let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    -y / p + (1.0 - y) / (1.0 - p)
}

pub fn squared_error(pred: f64, gold: f64) -> f64 {
    (pred - gold) * (pred - gold)
}

pub fn mse(preds: &[f64], golds: &[f64]) -> Result<f64> {
    if preds.len() != golds.len() {
        return Err(Error::data(format!(
            "{} predictions for {} targets",
            preds.len(),
            golds.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::data("no predictions"));
    }
    Ok(preds.iter().zip(golds).map(|(p, g)| squared_error(*p, *g)).sum::<f64>() / preds.len() as f64)
}

pub fn rmse(preds: &[f64], golds: &[f64]) -> Result<f64> {
    mse(preds, golds).map(f64::sqrt)
}
