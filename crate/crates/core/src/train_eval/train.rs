use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{bce_loss, rmse, squared_error};
use super::metrics::{compute_metrics, MetricsReport};
use crate::data::Diagnosis;
use crate::error::{Error, Result};
use crate::model::{fused_forward, FusionParams, Task};
use crate::numcore::{seeded_rng, AdamConfig, AdamState};
use crate::sequencing::WindowPair;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub task: Task,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub patience: usize,
    pub folds: usize,
    /// Share of the training sessions held out to select the epoch; 0 monitors
    /// the training set itself.
    pub validation_fraction: f64,
    /// Keep the epoch with the lowest monitored loss instead of the best metric.
    pub select_by_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: Task::Cls,
            lr: 1e-4,
            epochs: 200,
            batch_size: 16,
            seed: 0,
            patience: 20,
            folds: 5,
            validation_fraction: 0.0,
            select_by_loss: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("learning rate {} must be a finite value >= 0", self.lr)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch_size must be >= 1"));
        }
        if self.folds < 2 {
            return Err(Error::config("folds must be >= 2"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config(format!(
                "validation_fraction {} must lie in [0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Session accuracy (cls) or session RMSE (reg) on the monitored set.
    pub val_metric: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the best monitored epoch.
    pub params: FusionParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Per-session aggregate of window outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionOutput {
    pub session_id: String,
    pub label: Diagnosis,
    pub mmse: f64,
    /// Mean window probability (cls) or mean window score (reg).
    pub mean_output: f64,
    /// Mean window loss.
    pub loss: f64,
}

impl SessionOutput {
    pub fn predicted_label(&self) -> Diagnosis {
        Diagnosis::from_probability(self.mean_output)
    }

    pub fn predicted_mmse(&self) -> f64 {
        self.mean_output.clamp(0.0, crate::data::MMSE_MAX)
    }
}

/// Runs the model over every window and aggregates by session, in order of
/// first appearance.
pub fn session_outputs(params: &FusionParams, pairs: &[WindowPair], task: Task) -> Result<Vec<SessionOutput>> {
    let mut out: Vec<SessionOutput> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for pair in pairs {
        let y = fused_forward(pair, params, task)?;
        let loss = match task {
            Task::Cls => bce_loss(y, pair.label.target()),
            Task::Reg => squared_error(y, pair.mmse),
        };
        let k = *index.entry(pair.session_id.clone()).or_insert_with(|| {
            out.push(SessionOutput {
                session_id: pair.session_id.clone(),
                label: pair.label,
                mmse: pair.mmse,
                mean_output: 0.0,
                loss: 0.0,
            });
            counts.push(0);
            out.len() - 1
        });
        out[k].mean_output += y;
        out[k].loss += loss;
        counts[k] += 1;
    }
    for (s, n) in out.iter_mut().zip(counts) {
        s.mean_output /= n as f64;
        s.loss /= n as f64;
    }
    Ok(out)
}

/// Session-level metrics for a trained model.
pub fn evaluate(params: &FusionParams, pairs: &[WindowPair], task: Task) -> Result<MetricsReport> {
    let sessions = session_outputs(params, pairs, task)?;
    report_from_outputs(&sessions, task)
}

pub fn report_from_outputs(sessions: &[SessionOutput], task: Task) -> Result<MetricsReport> {
    let gold: Vec<Diagnosis> = sessions.iter().map(|s| s.label).collect();
    match task {
        Task::Cls => {
            let pred: Vec<Diagnosis> = sessions.iter().map(SessionOutput::predicted_label).collect();
            compute_metrics(&pred, &gold)
        }
        Task::Reg => {
            // classification fields follow from the MMSE cut-off between
            // the normal and impaired bands
            let preds: Vec<f64> = sessions.iter().map(SessionOutput::predicted_mmse).collect();
            let golds: Vec<f64> = sessions.iter().map(|s| s.mmse).collect();
            let pred: Vec<Diagnosis> = preds
                .iter()
                .map(|&m| if m < MMSE_NORMAL_MIN { Diagnosis::Ad } else { Diagnosis::NonAd })
                .collect();
            compute_metrics(&pred, &gold)?.with_rmse(&preds, &golds)
        }
    }
}

/// Lowest MMSE of the normal band.
pub const MMSE_NORMAL_MIN: f64 = 25.0;

struct Monitor {
    metric: f64,
    loss: f64,
}

impl Monitor {
    fn measure(params: &FusionParams, pairs: &[WindowPair], task: Task) -> Result<Self> {
        let sessions = session_outputs(params, pairs, task)?;
        let loss = sessions.iter().map(|s| s.loss).sum::<f64>() / sessions.len() as f64;
        let metric = match task {
            Task::Cls => {
                let hits = sessions.iter().filter(|s| s.predicted_label() == s.label).count();
                hits as f64 / sessions.len() as f64
            }
            Task::Reg => {
                let preds: Vec<f64> = sessions.iter().map(SessionOutput::predicted_mmse).collect();
                let golds: Vec<f64> = sessions.iter().map(|s| s.mmse).collect();
                rmse(&preds, &golds)?
            }
        };
        Ok(Monitor { metric, loss })
    }

    // accuracy up / rmse down; ties broken by monitored loss
    fn better_than(&self, other: &Monitor, task: Task, by_loss: bool) -> bool {
        if by_loss {
            return self.loss < other.loss;
        }
        let m = match task {
            Task::Cls => self.metric - other.metric,
            Task::Reg => other.metric - self.metric,
        };
        m > 0.0 || (m == 0.0 && self.loss < other.loss)
    }
}

/// Mini-batch Adam over window pairs.
///
/// The monitored set is `val` when given, else the training pairs. After
/// each epoch the session-level metric is recorded; the best epoch's
/// parameters are returned and training stops after `patience` epochs
/// without improvement.
pub fn train(
    config: &TrainConfig,
    init: FusionParams,
    train_pairs: &[WindowPair],
    val_pairs: Option<&[WindowPair]>,
) -> Result<TrainOutcome> {
    config.validate()?;
    init.validate()?;
    if train_pairs.is_empty() {
        return Err(Error::data("no training windows"));
    }
    let monitored = match val_pairs {
        Some(v) if !v.is_empty() => v,
        _ => train_pairs,
    };
    let task = config.task;
    let mut params = init;
    let mut adam = AdamState::new(AdamConfig::with_lr(config.lr), params.tensors());
    let mut rng = seeded_rng(config.seed);
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut pair_loss = vec![0.0; train_pairs.len()];

    let mut best = Monitor::measure(&params, monitored, task)?;
    let mut best_params = params.clone();
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(config.epochs);
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads = params.zeros_like();
            let w = 1.0 / batch.len() as f64;
            for &i in batch {
                let mask = params.dropout_mask(&mut rng);
                let loss = params.loss_and_grad_masked(&train_pairs[i], task, w, &mut grads, mask.as_deref())?;
                if !loss.is_finite() {
                    return Err(Error::numerical(format!(
                        "loss became {loss} in epoch {epoch} on a window of {}",
                        train_pairs[i].session_id
                    )));
                }
                pair_loss[i] = loss;
            }
            let g: Vec<_> = grads.tensors();
            adam.step(&mut params.tensors_mut(), &g)?;
        }
        // summed in index order so the value does not depend on the shuffle
        let train_loss = pair_loss.iter().sum::<f64>() / train_pairs.len() as f64;
        let current = Monitor::measure(&params, monitored, task)?;
        if !current.loss.is_finite() {
            return Err(Error::numerical(format!("monitored loss became {} in epoch {epoch}", current.loss)));
        }
        log::debug!("epoch {epoch}: train_loss {train_loss:.6} metric {:.4}", current.metric);
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_metric: current.metric,
        });
        if current.better_than(&best, task, config.select_by_loss) {
            best = current;
            best_params = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= config.patience {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainOutcome {
        params: best_params,
        history,
        best_epoch,
        stopped_early,
    })
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    for r in history {
        w.serialize(r).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_history(path: &Path) -> Result<Vec<EpochRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::data(format!("{}: {e}", path.display()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Modality;
    use crate::model::{BranchConfig, ModelConfig};
    use crate::numcore::{uniform, Matrix};

    fn tiny() -> ModelConfig {
        ModelConfig {
            modality: Modality::Both,
            audio: BranchConfig { layers: 1, hidden: 3, bidirectional: true, timestep: 3, stride: 1 },
            text: BranchConfig { layers: 1, hidden: 2, bidirectional: true, timestep: 2, stride: 1 },
            audio_input_dim: 2,
            text_input_dim: 3,
            fusion_dim: 4,
            highway_depth: 2,
            gate_bias_init: -1.0,
            forget_bias_init: 1.0,
            dropout: 0.0,
        }
    }

    /// Sessions whose windows carry the label in their sign.
    fn separable(n: usize, seed: u64) -> Vec<WindowPair> {
        let mut rng = seeded_rng(seed);
        let mut out = Vec::new();
        for s in 0..n {
            let label = if s % 2 == 0 { Diagnosis::Ad } else { Diagnosis::NonAd };
            let sign = if label == Diagnosis::Ad { 1.0 } else { -1.0 };
            for _ in 0..2 {
                let mut a = uniform(3, 2, 0.3, &mut rng);
                a.as_mut_slice().iter_mut().for_each(|v| *v += sign);
                let mut t = uniform(2, 3, 0.3, &mut rng);
                t.as_mut_slice().iter_mut().for_each(|v| *v += sign);
                out.push(WindowPair {
                    session_id: format!("s{s}"),
                    audio: Some(a),
                    text: Some(t),
                    label,
                    mmse: if label == Diagnosis::Ad { 15.0 } else { 28.0 },
                });
            }
        }
        out
    }

    fn cfg(lr: f64, epochs: usize) -> TrainConfig {
        TrainConfig { lr, epochs, batch_size: 4, seed: 5, patience: epochs, ..TrainConfig::default() }
    }

    #[test]
    fn same_seed_same_history() {
        let data = separable(6, 1);
        let init = FusionParams::init(&tiny(), 2).unwrap();
        let a = train(&cfg(1e-2, 10), init.clone(), &data, None).unwrap();
        let b = train(&cfg(1e-2, 10), init, &data, None).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn zero_lr_leaves_parameters() {
        let data = separable(4, 1);
        let init = FusionParams::init(&tiny(), 2).unwrap();
        let out = train(&cfg(0.0, 5), init.clone(), &data, None).unwrap();
        assert_eq!(out.params, init);
        let first = out.history[0];
        assert!(out.history.iter().all(|r| r.train_loss == first.train_loss && r.val_metric == first.val_metric));
    }

    #[test]
    fn separable_set_is_fitted() {
        let data = separable(8, 3);
        let init = FusionParams::init(&tiny(), 4).unwrap();
        let out = train(&cfg(1e-2, 150), init, &data, None).unwrap();
        assert_eq!(evaluate(&out.params, &data, Task::Cls).unwrap().accuracy, 1.0);
    }

    #[test]
    fn loss_decreases_at_small_lr() {
        let data = separable(8, 3);
        let init = FusionParams::init(&tiny(), 4).unwrap();
        let c = TrainConfig { batch_size: data.len(), ..cfg(1e-4, 40) };
        let h = train(&c, init, &data, None).unwrap().history;
        let violations = h.windows(2).filter(|w| w[1].train_loss > w[0].train_loss).count();
        assert!(violations as f64 <= 0.05 * (h.len() - 1) as f64, "{violations}");
    }

    #[test]
    fn early_stopping_keeps_best() {
        let data = separable(4, 3);
        let init = FusionParams::init(&tiny(), 4).unwrap();
        let c = TrainConfig { patience: 2, ..cfg(0.0, 50) };
        let out = train(&c, init.clone(), &data, None).unwrap();
        assert!(out.stopped_early);
        assert_eq!(out.history.len(), 2);
        assert_eq!(out.best_epoch, 0);
        assert_eq!(out.params, init);
    }

    #[test]
    fn loss_selection_keeps_lowest_loss_epoch() {
        let data = separable(6, 3);
        let init = FusionParams::init(&tiny(), 4).unwrap();
        let losses: Vec<f64> = (1..=8)
            .map(|k| {
                let c = TrainConfig { select_by_loss: true, ..cfg(5e-2, k) };
                let out = train(&c, init.clone(), &data, None).unwrap();
                Monitor::measure(&out.params, &data, Task::Cls).unwrap().loss
            })
            .collect();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
    }

    #[test]
    fn nan_is_reported_as_numerical() {
        let mut data = separable(2, 3);
        data[0].audio = Some(Matrix::filled(3, 2, f64::NAN));
        let init = FusionParams::init(&tiny(), 4).unwrap();
        let err = train(&cfg(1e-3, 3), init, &data, None).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }

    #[test]
    fn regression_report_has_rmse() {
        let data = separable(4, 3);
        let mut p = FusionParams::init(&tiny(), 4).unwrap();
        p.reg_w.fill(0.0);
        p.reg_b.fill(20.0);
        let r = evaluate(&p, &data, Task::Reg).unwrap();
        let expected = ((25.0 + 64.0) / 2.0f64).sqrt();
        assert!((r.rmse.unwrap() - expected).abs() < 1e-12);
        assert_eq!(r.accuracy, 0.5);
    }

    #[test]
    fn history_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("history.csv");
        let h = vec![
            EpochRecord { epoch: 1, train_loss: 0.693_147_180_559_945_3, val_metric: 0.5 },
            EpochRecord { epoch: 2, train_loss: 0.1 + 0.2, val_metric: 1.0 / 3.0 },
        ];
        write_history(&path, &h).unwrap();
        assert_eq!(read_history(&path).unwrap(), h);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("epoch,train_loss,val_metric"));
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(TrainConfig { lr: -1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { folds: 1, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        let init = FusionParams::init(&tiny(), 4).unwrap();
        assert!(train(&TrainConfig::default(), init, &[], None).is_err());
    }
}
