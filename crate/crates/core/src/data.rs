//! Session records and on-disk dataset layout.
//!
//! A dataset directory holds
//!
//! ```text
//! labels.csv            session_id,label,mmse   (label: AD | nonAD)
//! transcripts.jsonl     one utterance per line
//! features/<id>.csv     frame-level features, one file per session
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::disfluency::{read_transcripts, write_transcripts, Utterance};
use crate::error::{Error, Result};
use crate::featurize::FrameMatrix;

pub const MMSE_MAX: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Diagnosis {
    #[serde(rename = "nonAD")]
    NonAd,
    #[serde(rename = "AD")]
    Ad,
}

impl Diagnosis {
    pub fn target(self) -> f64 {
        match self {
            Diagnosis::Ad => 1.0,
            Diagnosis::NonAd => 0.0,
        }
    }

    pub fn from_probability(p: f64) -> Self {
        if p >= 0.5 {
            Diagnosis::Ad
        } else {
            Diagnosis::NonAd
        }
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diagnosis::Ad => "AD",
            Diagnosis::NonAd => "nonAD",
        })
    }
}

impl FromStr for Diagnosis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ad" | "cd" | "1" => Ok(Diagnosis::Ad),
            "nonad" | "non-ad" | "cc" | "0" => Ok(Diagnosis::NonAd),
            other => Err(Error::data(format!("unknown diagnosis label '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Audio,
    Text,
    Both,
}

impl Modality {
    pub fn uses_audio(self) -> bool {
        matches!(self, Modality::Audio | Modality::Both)
    }

    pub fn uses_text(self) -> bool {
        matches!(self, Modality::Text | Modality::Both)
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "audio" => Ok(Modality::Audio),
            "text" => Ok(Modality::Text),
            "both" => Ok(Modality::Both),
            other => Err(Error::config(format!("unknown modality '{other}'"))),
        }
    }
}

/// One subject's session.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionRecord {
    pub id: String,
    pub label: Diagnosis,
    pub mmse: f64,
    pub frames: Option<FrameMatrix>,
    /// All utterances, interviewer included, in utterance order.
    pub utterances: Vec<Utterance>,
}

impl SessionRecord {
    pub fn participant_utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().filter(|u| u.is_participant())
    }

    pub fn participant_tokens(&self) -> Vec<String> {
        self.participant_utterances()
            .flat_map(|u| u.tokens.iter().cloned())
            .collect()
    }

    pub fn participant_spans(&self) -> Vec<(f64, f64)> {
        self.participant_utterances()
            .map(|u| (u.start_time, u.end_time))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub session_id: String,
    pub label: Diagnosis,
    pub mmse: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset {
    pub sessions: Vec<SessionRecord>,
}

/// Locations of the three dataset inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetPaths {
    pub features_dir: PathBuf,
    pub transcripts: PathBuf,
    pub labels: PathBuf,
}

impl DatasetPaths {
    pub fn in_dir(dir: &Path) -> Self {
        DatasetPaths {
            features_dir: dir.join("features"),
            transcripts: dir.join("transcripts.jsonl"),
            labels: dir.join("labels.csv"),
        }
    }
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<LabelRow>().enumerate() {
        let row = rec.map_err(|e| Error::data(format!("{} row {}: {e}", path.display(), i + 1)))?;
        if !(0.0..=MMSE_MAX).contains(&row.mmse) {
            return Err(Error::data(format!(
                "{}: MMSE {} for {} outside [0, 30]",
                path.display(),
                row.mmse,
                row.session_id
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_labels(path: &Path, rows: &[LabelRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        wtr.serialize(r)
            .map_err(|e| Error::data(format!("writing {}: {e}", path.display())))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

impl Dataset {
    /// Loads every labelled session. Sessions lacking both a frame file and
    /// participant speech are skipped with a warning; if nothing is left the
    /// load fails.
    pub fn load(paths: &DatasetPaths, frame_rate_hz: f64) -> Result<Self> {
        let labels = read_labels(&paths.labels)?;
        let mut by_session: BTreeMap<String, Vec<Utterance>> = BTreeMap::new();
        if paths.transcripts.exists() {
            let file = File::open(&paths.transcripts).map_err(|e| Error::io(&paths.transcripts, e))?;
            for u in read_transcripts(BufReader::new(file))? {
                by_session.entry(u.session_id.clone()).or_default().push(u);
            }
        } else {
            warn!("transcript file {} not found", paths.transcripts.display());
        }

        let mut sessions = Vec::new();
        for row in labels {
            let frame_path = paths.features_dir.join(format!("{}.csv", row.session_id));
            let frames = if frame_path.exists() {
                Some(FrameMatrix::load(&frame_path, frame_rate_hz)?)
            } else {
                None
            };
            let mut utterances = by_session.remove(&row.session_id).unwrap_or_default();
            utterances.sort_by_key(|u| u.utterance_index);
            let has_speech = utterances.iter().any(|u| u.is_participant() && !u.tokens.is_empty());
            if frames.is_none() && !has_speech {
                warn!("session {}: no frame file and no transcript, skipped", row.session_id);
                continue;
            }
            sessions.push(SessionRecord {
                id: row.session_id,
                label: row.label,
                mmse: row.mmse,
                frames,
                utterances,
            });
        }
        for id in by_session.keys() {
            warn!("transcript session {id} has no label row, ignored");
        }
        if sessions.is_empty() {
            return Err(Error::data("no usable sessions in dataset"));
        }
        Ok(Dataset { sessions })
    }

    pub fn save(&self, paths: &DatasetPaths) -> Result<()> {
        fs::create_dir_all(&paths.features_dir).map_err(|e| Error::io(&paths.features_dir, e))?;
        let rows: Vec<LabelRow> = self
            .sessions
            .iter()
            .map(|s| LabelRow {
                session_id: s.id.clone(),
                label: s.label,
                mmse: s.mmse,
            })
            .collect();
        write_labels(&paths.labels, &rows)?;

        let file = File::create(&paths.transcripts).map_err(|e| Error::io(&paths.transcripts, e))?;
        let utts: Vec<Utterance> = self.sessions.iter().flat_map(|s| s.utterances.iter().cloned()).collect();
        write_transcripts(BufWriter::new(file), &utts)?;

        for s in &self.sessions {
            if let Some(frames) = &s.frames {
                let p = paths.features_dir.join(format!("{}.csv", s.id));
                let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
                frames.write_csv(BufWriter::new(f))?;
            }
        }
        Ok(())
    }

    pub fn count(&self, label: Diagnosis) -> usize {
        self.sessions.iter().filter(|s| s.label == label).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            sessions: indices.iter().map(|&i| self.sessions[i].clone()).collect(),
        }
    }
}
