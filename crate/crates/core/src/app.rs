//! Command implementations behind the `gatedfusion` binary.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::checkpoint::{Checkpoint, EmbeddingSource};
use crate::config::RunConfig;
use crate::data::{Dataset, Diagnosis, SessionRecord};
use crate::disfluency::{read_transcripts, tag_transcripts, write_transcripts, TagStats};
use crate::error::{Error, Result};
use crate::featurize::{stats_header, EmbeddingTable, FrameMatrix};
use crate::model::Task;
use crate::pipeline::{audio_segment_stats, cross_validate, extract_raw, fit, mean_report, usable_sessions, RawSession};
use crate::synth::generate;
use crate::train_eval::write_history;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const CV_REPORT_FILE: &str = "cv_report.json";
pub const METRICS_FILE: &str = "metrics.json";

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("json value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Lower-cased participant words across the dataset.
pub fn participant_vocabulary(dataset: &Dataset) -> Vec<String> {
    let set: BTreeSet<String> = dataset
        .sessions
        .iter()
        .flat_map(|s| s.participant_tokens())
        .map(|w| w.to_lowercase())
        .collect();
    set.into_iter().collect()
}

/// The configured embedding file, or a seeded synthetic table.
pub fn embeddings_for(cfg: &RunConfig, dataset: &Dataset) -> Result<(EmbeddingTable, EmbeddingSource)> {
    match &cfg.paths.embeddings {
        Some(path) => {
            let t = EmbeddingTable::load(path)?;
            let src = EmbeddingSource::File {
                path: path.clone(),
                dim: t.dim(),
                fingerprint: t.fingerprint(),
            };
            Ok((t, src))
        }
        None => {
            let src = EmbeddingSource::Synthetic {
                seed: cfg.features.embedding_seed,
                dim: cfg.features.embedding_dim,
            };
            Ok((src.resolve(&participant_vocabulary(dataset))?, src))
        }
    }
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    Dataset::load(&cfg.paths.dataset(), cfg.features.frame_rate_hz)
}

/// Writes a synthetic dataset to `paths.data_dir`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Value> {
    let ds = generate(&cfg.synth)?;
    let paths = cfg.paths.dataset();
    if let Some(parent) = paths.labels.parent() {
        create_dir(parent)?;
    }
    ds.save(&paths)?;
    Ok(json!({
        "sessions": ds.sessions.len(),
        "ad": ds.count(Diagnosis::Ad),
        "data_dir": cfg.paths.data_dir,
    }))
}

/// Per-session segment statistics, one CSV per session under
/// `<out_dir>/segment_stats/`.
pub fn cmd_featurize(cfg: &RunConfig) -> Result<Value> {
    let ds = load_dataset(cfg)?;
    let dir = cfg.paths.out_dir.join("segment_stats");
    create_dir(&dir)?;
    let mut written = 0;
    for s in &ds.sessions {
        let Some(stats) = audio_segment_stats(s)? else {
            log::warn!("session {}: no frame features, skipped", s.id);
            continue;
        };
        let base = s.frames.as_ref().map_or(0, FrameMatrix::base_features);
        let path = dir.join(format!("{}.csv", s.id));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        let mut header = vec!["segment".to_string()];
        header.extend(stats_header(base));
        w.write_record(&header).map_err(|e| Error::data(e.to_string()))?;
        for (k, row) in stats.row_iter().enumerate() {
            let mut rec = vec![k.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| Error::data(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written += 1;
    }
    Ok(json!({ "sessions": written, "dir": dir }))
}

/// Tags participant utterances and writes `<out_dir>/transcripts.tagged.jsonl`.
pub fn cmd_tag(cfg: &RunConfig) -> Result<Value> {
    let src = cfg.paths.dataset().transcripts;
    let f = File::open(&src).map_err(|e| Error::io(&src, e))?;
    let tagged = tag_transcripts(&read_transcripts(BufReader::new(f))?);
    create_dir(&cfg.paths.out_dir)?;
    let dst = cfg.paths.out_dir.join("transcripts.tagged.jsonl");
    let out = File::create(&dst).map_err(|e| Error::io(&dst, e))?;
    let mut w = BufWriter::new(out);
    write_transcripts(&mut w, &tagged)?;
    w.flush().map_err(|e| Error::io(&dst, e))?;
    let stats = tagged
        .iter()
        .filter_map(|u| u.tags.as_deref())
        .map(TagStats::from_tags)
        .fold(TagStats::default(), |a, b| a + b);
    Ok(json!({
        "utterances": tagged.len(),
        "words": stats.words,
        "edit_rate_per_100": stats.edit_rate_per_100(),
        "repair_rate_per_100": stats.repair_rate_per_100(),
        "output": dst,
    }))
}

fn raw_sessions(cfg: &RunConfig, ds: &Dataset, table: &EmbeddingTable) -> Result<Vec<RawSession>> {
    let raw = extract_raw(ds, table, cfg.features.disfluency)?;
    let keep = usable_sessions(&raw, cfg.features.modality);
    if keep.is_empty() {
        return Err(Error::data("every session was skipped"));
    }
    let mut raw: Vec<Option<RawSession>> = raw.into_iter().map(Some).collect();
    Ok(keep.into_iter().map(|i| raw[i].take().expect("each index once")).collect())
}

fn task_name(t: Task) -> &'static str {
    match t {
        Task::Cls => "cls",
        Task::Reg => "reg",
    }
}

/// Cross-validates, then fits on every session and saves the checkpoint.
///
/// Writes `fold_<k>/{metrics.json, history_<task>.csv}`, `cv_report.json`,
/// `history_<task>.csv` and `model.ckpt` under `out_dir`. Returns the CV report.
pub fn cmd_train(cfg: &RunConfig) -> Result<Value> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let (table, source) = embeddings_for(cfg, &ds)?;
    let raw = raw_sessions(cfg, &ds, &table)?;
    let opts = cfg.fit_options();
    let out = &cfg.paths.out_dir;
    create_dir(out)?;

    let folds = cross_validate(&raw, &opts, cfg.train.folds, cfg.train.seed)?;
    let mut fold_json = Vec::new();
    for f in &folds {
        let dir = out.join(format!("fold_{}", f.fold));
        create_dir(&dir)?;
        for (task, h) in &f.histories {
            write_history(&dir.join(format!("history_{}.csv", task_name(*task))), h)?;
        }
        let m = f.report.to_json();
        write_json(&dir.join(METRICS_FILE), &m)?;
        fold_json.push(json!({ "fold": f.fold, "validation_sessions": f.val_sessions, "metrics": m }));
    }
    let reports: Vec<_> = folds.iter().map(|f| f.report.clone()).collect();
    let report = json!({
        "folds": fold_json,
        "mean": mean_report(&reports)?.to_json(),
    });
    write_json(&out.join(CV_REPORT_FILE), &report)?;

    let all: Vec<&RawSession> = raw.iter().collect();
    let final_fit = fit(&all, &opts)?;
    for (task, h) in &final_fit.histories {
        write_history(&out.join(format!("history_{}.csv", task_name(*task))), h)?;
    }
    let ckpt = Checkpoint {
        seed: cfg.train.seed,
        embedding: source,
        bundle: final_fit.bundle,
    };
    ckpt.save(&out.join(CHECKPOINT_FILE))?;
    Ok(report)
}

fn checkpoint_sessions(ckpt: &Checkpoint, ds: &Dataset) -> Result<Vec<RawSession>> {
    let table = ckpt.embedding.resolve(&participant_vocabulary(ds))?;
    let raw = extract_raw(ds, &table, ckpt.bundle.disfluency)?;
    let keep = usable_sessions(&raw, ckpt.bundle.modality);
    if keep.is_empty() {
        return Err(Error::data("every session was skipped"));
    }
    Ok(keep.into_iter().map(|i| raw[i].clone()).collect())
}

/// Session-level metrics of a checkpoint on the configured dataset.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path) -> Result<Value> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let ds = load_dataset(cfg)?;
    let raw = checkpoint_sessions(&ckpt, &ds)?;
    let refs: Vec<&RawSession> = raw.iter().collect();
    let m = ckpt.bundle.evaluate(&refs)?.report.to_json();
    create_dir(&cfg.paths.out_dir)?;
    write_json(&cfg.paths.out_dir.join(METRICS_FILE), &m)?;
    Ok(m)
}

/// Inputs of a single unlabelled session.
#[derive(Clone, Debug, Default)]
pub struct PredictInput {
    pub session_id: String,
    pub features: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
}

pub fn cmd_predict(cfg: &RunConfig, checkpoint: &Path, input: &PredictInput) -> Result<Value> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let frames = match &input.features {
        Some(p) => Some(FrameMatrix::load(p, cfg.features.frame_rate_hz)?),
        None => None,
    };
    let utterances = match &input.transcript {
        Some(p) => {
            let f = File::open(p).map_err(|e| Error::io(p, e))?;
            let mut u = read_transcripts(BufReader::new(f))?;
            u.sort_by_key(|u| u.utterance_index);
            u
        }
        None => Vec::new(),
    };
    let id = if input.session_id.is_empty() {
        frames.as_ref().map_or_else(|| "session".to_string(), |f| f.session_id.clone())
    } else {
        input.session_id.clone()
    };
    let ds = Dataset {
        sessions: vec![SessionRecord {
            id: id.clone(),
            // placeholders; predictions do not read them
            label: Diagnosis::NonAd,
            mmse: 0.0,
            frames,
            utterances,
        }],
    };
    let table = ckpt.embedding.resolve(&participant_vocabulary(&ds))?;
    let raw = extract_raw(&ds, &table, ckpt.bundle.disfluency)?;
    let ev = ckpt.bundle.evaluate(&[&raw[0]])?;
    let p = &ev.predictions[0];
    Ok(json!({
        "session_id": id,
        "label": p.label.map(|l| l.to_string()),
        "probability": p.probability,
        "mmse_estimate": p.mmse_estimate,
    }))
}
