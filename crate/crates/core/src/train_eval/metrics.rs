use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::loss::rmse;
use crate::data::Diagnosis;
use crate::error::{Error, Result};

/// Confusion counts with a chosen positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same table with the other class taken as positive.
    pub fn swapped(&self) -> Self {
        ConfusionCounts::new(self.tn, self.fn_, self.fp, self.tp)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }

    pub fn class_metrics(&self) -> ClassMetrics {
        ClassMetrics {
            precision: self.precision(),
            recall: self.recall(),
            f1: self.f1(),
        }
    }
}

// 0/0 is reported as 0
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub ad: ClassMetrics,
    pub nonad: ClassMetrics,
    /// Present only when MMSE estimates were supplied.
    pub rmse: Option<f64>,
    /// Counts with AD as the positive class.
    pub confusion: ConfusionCounts,
}

pub fn confusion(pred: &[Diagnosis], gold: &[Diagnosis], positive: Diagnosis) -> Result<ConfusionCounts> {
    if pred.len() != gold.len() {
        return Err(Error::data(format!("{} predictions for {} labels", pred.len(), gold.len())));
    }
    if pred.is_empty() {
        return Err(Error::data("cannot compute metrics on an empty set"));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.iter().zip(gold) {
        match (p == positive, g == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

impl MetricsReport {
    pub fn from_confusion(ad: ConfusionCounts) -> Self {
        MetricsReport {
            accuracy: ad.accuracy(),
            ad: ad.class_metrics(),
            nonad: ad.swapped().class_metrics(),
            rmse: None,
            confusion: ad,
        }
    }

    pub fn with_rmse(mut self, preds: &[f64], golds: &[f64]) -> Result<Self> {
        self.rmse = Some(rmse(preds, golds)?);
        Ok(self)
    }

    /// Flat JSON object, every real rounded to 4 decimals.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("accuracy".into(), round4(self.accuracy));
        m.insert("precision_ad".into(), round4(self.ad.precision));
        m.insert("recall_ad".into(), round4(self.ad.recall));
        m.insert("f1_ad".into(), round4(self.ad.f1));
        m.insert("precision_nonad".into(), round4(self.nonad.precision));
        m.insert("recall_nonad".into(), round4(self.nonad.recall));
        m.insert("f1_nonad".into(), round4(self.nonad.f1));
        m.insert("rmse".into(), self.rmse.map_or(Value::Null, round4));
        m.insert(
            "confusion".into(),
            json!({
                "tp": self.confusion.tp,
                "fp": self.confusion.fp,
                "fn": self.confusion.fn_,
                "tn": self.confusion.tn,
            }),
        );
        Value::Object(m)
    }
}

/// Rounds half away from zero to 4 decimals.
pub fn round4(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let r = (x * 1e4).round() / 1e4;
    json!(r)
}

/// Session-level metrics with AD as positive class, per-class rows for both.
pub fn compute_metrics(pred: &[Diagnosis], gold: &[Diagnosis]) -> Result<MetricsReport> {
    Ok(MetricsReport::from_confusion(confusion(pred, gold, Diagnosis::Ad)?))
}
