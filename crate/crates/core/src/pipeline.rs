//! End-to-end glue: session records → feature sequences → window pairs →
//! trained models → session-level metrics.
//!
//! Normalization and feature selection are fitted on the training sessions
//! only and then applied unchanged to held-out sessions.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Diagnosis, Modality, SessionRecord};
use crate::disfluency::{encode_and_concat, tag_incremental, DisfluencyTag};
use crate::error::{Error, Result};
use crate::featurize::{embed_tokens, segment_stats, select_features, EmbeddingTable, ZScore, DEFAULT_ALPHA};
use crate::model::{FusionParams, ModelConfig, Task};
use crate::numcore::Matrix;
use crate::sequencing::{build_pairs, SessionSequences, WindowPair};
use crate::train_eval::{
    fold_indices, report_from_outputs, session_outputs, split_cv, split_holdout, train, EpochRecord, MetricsReport, SessionOutput,
    TrainConfig,
};

/// Chunk length used to segment audio when a session has no participant
/// utterance spans.
pub const FALLBACK_CHUNK_SECS: f64 = 1.0;

/// Per-session inputs before any fitted transform.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSession {
    pub id: String,
    pub label: Diagnosis,
    pub mmse: f64,
    /// One row of segment statistics per speech segment; `None` without audio.
    pub audio_stats: Option<Matrix>,
    /// Word vectors of the participant's words, tag columns appended when
    /// disfluency features are on.
    pub text: Matrix,
}

/// Statistics rows for the participant's speech segments.
pub fn audio_segment_stats(session: &SessionRecord) -> Result<Option<Matrix>> {
    let Some(frames) = &session.frames else {
        return Ok(None);
    };
    let spans = session.participant_spans();
    let segments = if spans.is_empty() {
        frames.segment_fixed(FALLBACK_CHUNK_SECS)
    } else {
        frames.segment_by_spans(&spans)
    };
    if segments.is_empty() {
        return Ok(None);
    }
    let rows = segments
        .iter()
        .map(segment_stats)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::data(format!("{}: {e}", session.id)))?;
    let cols = rows[0].len();
    Matrix::from_rows(&rows, cols).map(Some)
}

/// Participant word sequence as embedding rows, optionally with one-hot
/// disfluency tags. Stored tags are used when present; otherwise every
/// utterance is tagged afresh.
pub fn text_sequence(session: &SessionRecord, table: &EmbeddingTable, disfluency: bool) -> Result<Matrix> {
    let tokens = session.participant_tokens();
    let emb = embed_tokens(&tokens, table);
    if !disfluency {
        return Ok(emb);
    }
    let tags: Vec<DisfluencyTag> = session
        .participant_utterances()
        .flat_map(|u| u.tags.clone().unwrap_or_else(|| tag_incremental(&u.tokens)))
        .collect();
    encode_and_concat(&emb, &tags).map_err(|e| Error::data(format!("{}: {e}", session.id)))
}

/// Width of the text branch input.
pub fn text_width(embedding_dim: usize, disfluency: bool) -> usize {
    embedding_dim + if disfluency { DisfluencyTag::ORDER.len() } else { 0 }
}

pub fn extract_raw(dataset: &Dataset, table: &EmbeddingTable, disfluency: bool) -> Result<Vec<RawSession>> {
    dataset
        .sessions
        .iter()
        .map(|s| {
            Ok(RawSession {
                id: s.id.clone(),
                label: s.label,
                mmse: s.mmse,
                audio_stats: audio_segment_stats(s)?,
                text: text_sequence(s, table, disfluency)?,
            })
        })
        .collect()
}

/// Drops sessions lacking a modality the model needs, with a warning each.
pub fn usable_sessions(raw: &[RawSession], modality: Modality) -> Vec<usize> {
    (0..raw.len())
        .filter(|&i| {
            let ok = !modality.uses_audio() || raw[i].audio_stats.is_some();
            if !ok {
                log::warn!("skipping session {}: no audio features", raw[i].id);
            }
            ok
        })
        .collect()
}

/// Fitted audio transform: z-score on all training segment rows, then the
/// significance mask against the segment's session label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AudioTransform {
    pub zscore: ZScore,
    pub keep_mask: Vec<bool>,
}

impl AudioTransform {
    pub fn fit(train: &[&RawSession], alpha: f64) -> Result<Self> {
        let mut parts = Vec::new();
        let mut targets = Vec::new();
        for s in train {
            if let Some(a) = &s.audio_stats {
                targets.extend(std::iter::repeat_n(s.label.target(), a.rows()));
                parts.push(a.clone());
            }
        }
        let cols = parts
            .first()
            .map(Matrix::cols)
            .ok_or_else(|| Error::data("no training session has audio features"))?;
        let stacked = Matrix::vstack(&parts, cols)?;
        let zscore = ZScore::fit(&stacked)?;
        let normalized = zscore.apply(&stacked)?;
        let keep_mask = select_features(&normalized, &targets, alpha)?;
        if !keep_mask.iter().any(|&k| k) {
            return Err(Error::data(format!(
                "no audio feature is significantly correlated with the labels at alpha {alpha}"
            )));
        }
        Ok(AudioTransform { zscore, keep_mask })
    }

    pub fn output_dim(&self) -> usize {
        self.keep_mask.iter().filter(|&&k| k).count()
    }

    pub fn apply(&self, stats: &Matrix) -> Result<Matrix> {
        if stats.cols() != self.keep_mask.len() {
            return Err(Error::config(format!(
                "feature selection: mask covers {} statistics, session has {}",
                self.keep_mask.len(),
                stats.cols()
            )));
        }
        let z = self
            .zscore
            .apply(stats)
            .map_err(|e| Error::config(format!("normalization: {e}")))?;
        z.select_columns(&self.keep_mask)
    }
}

/// Feature transforms plus the trained heads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub modality: Modality,
    pub disfluency: bool,
    pub audio: Option<AudioTransform>,
    pub text_dim: usize,
    pub cls: Option<FusionParams>,
    pub reg: Option<FusionParams>,
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Branch shapes and fusion width; input widths are filled in from the
    /// fitted features.
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub tasks: Vec<Task>,
    pub disfluency: bool,
    pub alpha: f64,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl FitOptions {
    pub fn new(model: ModelConfig, train: TrainConfig, tasks: Vec<Task>, disfluency: bool, seed: u64) -> Self {
        FitOptions {
            model,
            train,
            tasks,
            disfluency,
            alpha: DEFAULT_ALPHA,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::config("no task selected"));
        }
        if self.disfluency && !self.model.modality.uses_text() {
            return Err(Error::config("disfluency features need the text modality"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha {} must lie in (0, 1)", self.alpha)));
        }
        self.train.validate()
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub bundle: ModelBundle,
    pub histories: Vec<(Task, Vec<EpochRecord>)>,
}

impl ModelBundle {
    pub fn model_config(&self) -> Option<&ModelConfig> {
        self.cls.as_ref().or(self.reg.as_ref()).map(|p| &p.config)
    }

    pub fn params(&self, task: Task) -> Option<&FusionParams> {
        match task {
            Task::Cls => self.cls.as_ref(),
            Task::Reg => self.reg.as_ref(),
        }
    }

    /// Window pairs of one session under the fitted transforms.
    pub fn session_pairs(&self, raw: &RawSession) -> Result<Vec<WindowPair>> {
        let cfg = self
            .model_config()
            .ok_or_else(|| Error::config("model bundle holds no trained model"))?;
        self.pairs_with(cfg, raw)
    }

    fn pairs_with(&self, cfg: &ModelConfig, raw: &RawSession) -> Result<Vec<WindowPair>> {
        let audio = match (&self.audio, self.modality.uses_audio()) {
            (Some(t), true) => {
                let stats = raw
                    .audio_stats
                    .as_ref()
                    .ok_or_else(|| Error::data(format!("{}: session missing modality audio", raw.id)))?;
                Some(t.apply(stats)?)
            }
            (None, true) => return Err(Error::config("audio model without a fitted audio transform")),
            _ => None,
        };
        let text = if self.modality.uses_text() {
            if raw.text.cols() != self.text_dim {
                return Err(Error::config(format!(
                    "text features: model expects width {}, session has {} (embedding dim or disfluency flag differ)",
                    self.text_dim,
                    raw.text.cols()
                )));
            }
            Some(&raw.text)
        } else {
            None
        };
        build_pairs(
            &SessionSequences {
                session_id: &raw.id,
                label: raw.label,
                mmse: raw.mmse,
                audio: audio.as_ref(),
                text,
            },
            cfg.audio.window_spec(),
            cfg.text.window_spec(),
            self.modality,
        )
    }

    pub fn pairs(&self, sessions: &[&RawSession]) -> Result<Vec<WindowPair>> {
        let mut out = Vec::new();
        for s in sessions {
            out.extend(self.session_pairs(s)?);
        }
        Ok(out)
    }

    /// Session-level predictions and metrics. Classification fields come
    /// from the cls model when present; RMSE from the reg model.
    pub fn evaluate(&self, sessions: &[&RawSession]) -> Result<Evaluation> {
        let pairs = self.pairs(sessions)?;
        let cls = match &self.cls {
            Some(p) => Some(session_outputs(p, &pairs, Task::Cls)?),
            None => None,
        };
        let reg = match &self.reg {
            Some(p) => Some(session_outputs(p, &pairs, Task::Reg)?),
            None => None,
        };
        let mut report = match (&cls, &reg) {
            (Some(c), _) => report_from_outputs(c, Task::Cls)?,
            (None, Some(r)) => report_from_outputs(r, Task::Reg)?,
            (None, None) => return Err(Error::config("model bundle holds no trained model")),
        };
        if let Some(r) = &reg {
            report.rmse = report_from_outputs(r, Task::Reg)?.rmse;
        }
        let n = cls.as_ref().or(reg.as_ref()).map_or(0, Vec::len);
        let predictions = (0..n)
            .map(|k| {
                let base: &SessionOutput = cls.as_ref().or(reg.as_ref()).map(|v| &v[k]).expect("non-empty");
                Prediction {
                    session_id: base.session_id.clone(),
                    label: cls.as_ref().map(|c| c[k].predicted_label()),
                    probability: cls.as_ref().map(|c| c[k].mean_output),
                    mmse_estimate: reg.as_ref().map(|r| r[k].predicted_mmse()),
                }
            })
            .collect();
        Ok(Evaluation { report, predictions })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub session_id: String,
    pub label: Option<Diagnosis>,
    pub probability: Option<f64>,
    pub mmse_estimate: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub predictions: Vec<Prediction>,
}

/// Fits transforms and trains one model per task on `train_sessions`.
///
/// With `train.validation_fraction > 0` a stratified share of the sessions is
/// held out: transforms and weights are fitted on the rest and the epoch is
/// chosen on the held-out share.
pub fn fit(train_sessions: &[&RawSession], opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    if train_sessions.is_empty() {
        return Err(Error::data("no training sessions"));
    }
    let (train_sessions, val_sessions) = if opts.train.validation_fraction > 0.0 {
        let labels: Vec<Diagnosis> = train_sessions.iter().map(|s| s.label).collect();
        let (tr, va) = split_holdout(&labels, opts.train.validation_fraction, opts.seed)?;
        (
            tr.iter().map(|&i| train_sessions[i]).collect::<Vec<_>>(),
            va.iter().map(|&i| train_sessions[i]).collect::<Vec<_>>(),
        )
    } else {
        (train_sessions.to_vec(), Vec::new())
    };
    let train_sessions = train_sessions.as_slice();
    let modality = opts.model.modality;
    let audio = if modality.uses_audio() {
        Some(AudioTransform::fit(train_sessions, opts.alpha)?)
    } else {
        None
    };
    let text_dim = train_sessions[0].text.cols();
    if train_sessions.iter().any(|s| s.text.cols() != text_dim) {
        return Err(Error::data("sessions disagree on text feature width"));
    }
    let mut model = opts.model.clone();
    model.audio_input_dim = audio.as_ref().map_or(0, AudioTransform::output_dim);
    model.text_input_dim = if modality.uses_text() { text_dim } else { 0 };

    let mut bundle = ModelBundle {
        modality,
        disfluency: opts.disfluency,
        audio,
        text_dim,
        cls: None,
        reg: None,
    };
    let mut pairs = Vec::new();
    for s in train_sessions {
        pairs.extend(bundle.pairs_with(&model, s)?);
    }
    let mut val_pairs = Vec::new();
    for s in &val_sessions {
        val_pairs.extend(bundle.pairs_with(&model, s)?);
    }

    let mut histories = Vec::new();
    for &task in &opts.tasks {
        let mut init = FusionParams::init(&model, opts.seed)?;
        if task == Task::Reg {
            let mean = train_sessions.iter().map(|s| s.mmse).sum::<f64>() / train_sessions.len() as f64;
            init.reg_b.fill(mean);
        }
        let cfg = TrainConfig { task, ..opts.train.clone() };
        let outcome = train(&cfg, init, &pairs, (!val_pairs.is_empty()).then_some(val_pairs.as_slice()))?;
        log::info!(
            "{task:?}: {} epochs, best epoch {}, {} windows",
            outcome.history.len(),
            outcome.best_epoch,
            pairs.len()
        );
        match task {
            Task::Cls => bundle.cls = Some(outcome.params),
            Task::Reg => bundle.reg = Some(outcome.params),
        }
        histories.push((task, outcome.history));
    }
    Ok(FitResult { bundle, histories })
}

#[derive(Clone, Debug)]
pub struct FoldResult {
    pub fold: usize,
    pub train_sessions: Vec<String>,
    pub val_sessions: Vec<String>,
    pub report: MetricsReport,
    pub histories: Vec<(Task, Vec<EpochRecord>)>,
}

/// Stratified k-fold cross-validation over `raw`: transforms and models are
/// fitted on the training folds and scored on the held-out fold.
pub fn cross_validate(raw: &[RawSession], opts: &FitOptions, folds: usize, split_seed: u64) -> Result<Vec<FoldResult>> {
    let labels: Vec<Diagnosis> = raw.iter().map(|s| s.label).collect();
    let assignment = split_cv(&labels, folds, split_seed)?;
    (0..folds)
        .map(|k| {
            let (tr, va) = fold_indices(&assignment, k);
            let train_s: Vec<&RawSession> = tr.iter().map(|&i| &raw[i]).collect();
            let val_s: Vec<&RawSession> = va.iter().map(|&i| &raw[i]).collect();
            let fitted = fit(&train_s, opts)?;
            let report = fitted.bundle.evaluate(&val_s)?.report;
            log::info!("fold {k}: accuracy {:.4}", report.accuracy);
            Ok(FoldResult {
                fold: k,
                train_sessions: train_s.iter().map(|s| s.id.clone()).collect(),
                val_sessions: val_s.iter().map(|s| s.id.clone()).collect(),
                report,
                histories: fitted.histories,
            })
        })
        .collect()
}

/// Field-wise mean of fold metrics; confusion counts are summed.
pub fn mean_report(reports: &[MetricsReport]) -> Result<MetricsReport> {
    if reports.is_empty() {
        return Err(Error::data("no fold reports"));
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let mut out = reports[0].clone();
    out.accuracy = mean(&|r| r.accuracy);
    out.ad.precision = mean(&|r| r.ad.precision);
    out.ad.recall = mean(&|r| r.ad.recall);
    out.ad.f1 = mean(&|r| r.ad.f1);
    out.nonad.precision = mean(&|r| r.nonad.precision);
    out.nonad.recall = mean(&|r| r.nonad.recall);
    out.nonad.f1 = mean(&|r| r.nonad.f1);
    out.rmse = if reports.iter().all(|r| r.rmse.is_some()) {
        Some(mean(&|r| r.rmse.unwrap_or(0.0)))
    } else {
        None
    };
    let mut c = reports[0].confusion;
    for r in &reports[1..] {
        c.tp += r.confusion.tp;
        c.fp += r.confusion.fp;
        c.fn_ += r.confusion.fn_;
        c.tn += r.confusion.tn;
    }
    out.confusion = c;
    Ok(out)
}
