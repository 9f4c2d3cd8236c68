//! Synthetic picture-description sessions.
//!
//! Every session gets a latent impairment `q = 0.6·y + 0.4·(30 − mmse)/30`.
//! Audio, lexical and disfluency channels each see their own noisy copy of
//! `q`, scaled by `signal_strength`; at strength 0 nothing depends on the
//! label.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Diagnosis, SessionRecord};
use crate::disfluency::Utterance;
use crate::error::{Error, Result};
use crate::featurize::{EmbeddingTable, FrameMatrix, DEFAULT_BASE_FEATURES, DEFAULT_EMBEDDING_DIM, DEFAULT_FRAME_RATE_HZ};
use crate::numcore::{seeded_rng, Matrix, Rng64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_sessions: usize,
    pub ad_fraction: f64,
    pub seed: u64,
    pub signal_strength: f64,
    /// Mean number of participant segments per session.
    pub mean_segments: f64,
    pub base_features: usize,
    pub frame_rate_hz: f64,
    /// Segment duration range in seconds.
    pub segment_secs: (f64, f64),
    /// Mean words per participant segment.
    pub mean_words: f64,
    /// Per-channel noise on the latent impairment.
    pub channel_noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_sessions: 108,
            ad_fraction: 0.5,
            seed: 0,
            signal_strength: 1.0,
            mean_segments: 24.86,
            base_features: DEFAULT_BASE_FEATURES,
            frame_rate_hz: DEFAULT_FRAME_RATE_HZ,
            segment_secs: (0.3, 0.5),
            mean_words: 6.0,
            channel_noise: 0.35,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_sessions == 0 {
            return Err(Error::config("n_sessions must be >= 1"));
        }
        if !(self.ad_fraction > 0.0 && self.ad_fraction < 1.0) {
            return Err(Error::config(format!("ad_fraction {} must lie in (0, 1)", self.ad_fraction)));
        }
        if !(self.signal_strength >= 0.0 && self.signal_strength.is_finite()) {
            return Err(Error::config("signal_strength must be a finite value >= 0"));
        }
        if !(self.mean_segments >= 1.0 && self.mean_segments.is_finite()) {
            return Err(Error::config("mean_segments must be >= 1"));
        }
        if self.base_features == 0 || !(self.frame_rate_hz > 0.0) {
            return Err(Error::config("base_features and frame_rate_hz must be positive"));
        }
        let (lo, hi) = self.segment_secs;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::config("segment_secs must satisfy 0 < min <= max"));
        }
        if !(self.mean_words >= 1.0) || !(self.channel_noise >= 0.0) {
            return Err(Error::config("mean_words must be >= 1 and channel_noise >= 0"));
        }
        Ok(())
    }
}

const CONTENT: &[&str] = &[
    "boy", "girl", "cookie", "jar", "stool", "mother", "sink", "water", "dishes", "window", "curtains", "plate",
    "cupboard", "falling", "overflowing", "drying", "reaching", "taking", "kitchen", "floor", "counter", "tipping",
    "washing", "garden",
];
const FUNCTION: &[&str] = &["the", "a", "is", "and", "on", "of", "to", "her", "his", "she", "he", "in", "from"];
const VAGUE: &[&str] = &["thing", "stuff", "something", "there", "that", "this", "doing", "going"];
const FILLERS: &[&str] = &["uh", "um", "er"];
const INTERVIEWER: &[&str] = &["tell", "me", "everything", "you", "see", "going", "on", "in", "the", "picture"];

/// Every word the generator can emit.
pub fn vocabulary() -> Vec<&'static str> {
    let mut v: Vec<&str> = [CONTENT, FUNCTION, VAGUE, FILLERS, INTERVIEWER, &["i", "mean", "you", "know"]].concat();
    v.sort_unstable();
    v.dedup();
    v
}

/// Embedding table over [`vocabulary`].
pub fn synthetic_embeddings(seed: u64, dim: usize) -> EmbeddingTable {
    EmbeddingTable::synthetic(seed, dim, &vocabulary())
}

pub fn default_embeddings(seed: u64) -> EmbeddingTable {
    synthetic_embeddings(seed, DEFAULT_EMBEDDING_DIM)
}

/// Integer MMSE drawn from the label's bands: 25–30 for non-AD; for AD mild
/// 21–24, moderate 10–20 and severe 0–9 with weights 0.45 / 0.45 / 0.10.
pub fn sample_mmse(label: Diagnosis, rng: &mut Rng64) -> f64 {
    let v = match label {
        Diagnosis::NonAd => rng.random_range(25..=30),
        Diagnosis::Ad => {
            let u: f64 = rng.random();
            if u < 0.45 {
                rng.random_range(21..=24)
            } else if u < 0.90 {
                rng.random_range(10..=20)
            } else {
                rng.random_range(0..=9)
            }
        }
    };
    v as f64
}

struct Latents {
    audio: f64,
    lexical: f64,
    disfluency: f64,
}

fn latents(label: Diagnosis, mmse: f64, spec: &SyntheticSpec, rng: &mut Rng64) -> Latents {
    let q = 0.6 * label.target() + 0.4 * (30.0 - mmse) / 30.0;
    let noise = Normal::new(0.0, spec.channel_noise.max(f64::MIN_POSITIVE)).expect("valid sd");
    let mut channel = || (spec.signal_strength * (q + noise.sample(rng))).clamp(0.0, 1.5);
    Latents {
        audio: channel(),
        lexical: channel(),
        disfluency: channel(),
    }
}

fn pick<'a>(words: &[&'a str], rng: &mut Rng64) -> &'a str {
    words[rng.random_range(0..words.len())]
}

/// Words of one participant segment. Impairment raises the share of vague
/// words and the rates of fillers, repetitions and substitutions.
fn participant_words(lat: &Latents, mean_words: f64, rng: &mut Rng64) -> Vec<String> {
    let n = 1 + Poisson::new(mean_words - 1.0 + 1e-9).expect("positive rate").sample(rng) as usize;
    let p_vague = 0.1 + 0.35 * lat.lexical;
    let p_filler = 0.02 + 0.12 * lat.disfluency;
    let p_repeat = 0.01 + 0.12 * lat.disfluency;
    let p_substitute = 0.01 + 0.08 * lat.disfluency;
    let mut out: Vec<String> = Vec::with_capacity(2 * n);
    for k in 0..n {
        let word = if k % 2 == 1 {
            pick(FUNCTION, rng)
        } else if rng.random::<f64>() < p_vague {
            pick(VAGUE, rng)
        } else {
            pick(CONTENT, rng)
        };
        if rng.random::<f64>() < p_filler {
            out.push(pick(FILLERS, rng).to_string());
        }
        out.push(word.to_string());
        let u: f64 = rng.random();
        if u < p_repeat {
            out.push(word.to_string());
        } else if u < p_repeat + p_substitute {
            // reparandum, interregnum, repair onset
            out.push(if rng.random::<bool>() { "uh".into() } else { "i".into() });
            if out.last().is_some_and(|w| w == "i") {
                out.push("mean".into());
            }
            out.push(pick(CONTENT, rng).to_string());
        }
    }
    out
}

/// Frame block for one participant segment: unit noise around a per-session
/// offset, mean and spread shifted on the signal features, with a trailing
/// run of silent (zero) frames whose length grows with impairment.
fn segment_frames(frames: usize, offset: &[f64], audio: f64, rng: &mut Rng64) -> Vec<Vec<f64>> {
    let unit = Normal::new(0.0, 1.0).expect("valid sd");
    let f = offset.len();
    let silent = ((frames as f64) * (0.05 * rng.random::<f64>() + 0.3 * audio)).round() as usize;
    let silent = silent.min(frames.saturating_sub(1));
    (0..frames)
        .map(|t| {
            if t >= frames - silent {
                return vec![0.0; f];
            }
            (0..f)
                .map(|j| {
                    let z = unit.sample(rng);
                    match j % 8 {
                        0 => offset[j] + z + 0.8 * audio,
                        4 => offset[j] + z * (1.0 + 0.8 * audio),
                        _ => offset[j] + z,
                    }
                })
                .collect()
        })
        .collect()
}

fn session(id: String, label: Diagnosis, spec: &SyntheticSpec, rng: &mut Rng64) -> Result<SessionRecord> {
    let mmse = sample_mmse(label, rng);
    let lat = latents(label, mmse, spec, rng);
    let offset_dist = Normal::new(0.0, 0.3).expect("valid sd");
    let offset: Vec<f64> = (0..spec.base_features).map(|_| offset_dist.sample(rng)).collect();
    let n_segments = (1 + Poisson::new(spec.mean_segments - 1.0 + 1e-9)
        .expect("positive rate")
        .sample(rng) as usize)
        .max(1);

    let dt = 1.0 / spec.frame_rate_hz;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut utterances = Vec::new();
    let unit = Normal::new(0.0, 1.0).expect("valid sd");
    let filler_frames = |n: usize, rows: &mut Vec<Vec<f64>>, rng: &mut Rng64| {
        for _ in 0..n {
            rows.push(offset.iter().map(|o| o + unit.sample(rng)).collect());
        }
    };
    let (lo, hi) = spec.segment_secs;
    let push_utt = |speaker: &str, tokens: Vec<String>, start: usize, end: usize, utterances: &mut Vec<Utterance>| {
        utterances.push(Utterance {
            session_id: id.clone(),
            utterance_index: utterances.len(),
            speaker: speaker.into(),
            start_time: start as f64 * dt,
            end_time: end as f64 * dt,
            tokens,
            tags: None,
        });
    };

    for k in 0..n_segments {
        if k == 0 || rng.random::<f64>() < 0.08 {
            let start = rows.len();
            let n = (rng.random_range(lo..=hi) * spec.frame_rate_hz).round() as usize;
            filler_frames(n.max(1), &mut rows, rng);
            let words: Vec<String> = INTERVIEWER
                .iter()
                .take(rng.random_range(3..=INTERVIEWER.len()))
                .map(|w| w.to_string())
                .collect();
            push_utt("INV", words, start, rows.len(), &mut utterances);
        }
        let gap = rng.random_range(3..=8);
        filler_frames(gap, &mut rows, rng);
        let start = rows.len();
        let n = ((rng.random_range(lo..=hi) * spec.frame_rate_hz).round() as usize).max(1);
        rows.extend(segment_frames(n, &offset, lat.audio, rng));
        let words = participant_words(&lat, spec.mean_words, rng);
        push_utt("PAR", words, start, rows.len(), &mut utterances);
    }
    let timestamps = (0..rows.len()).map(|t| t as f64 * dt).collect();
    let values = Matrix::from_rows(&rows, spec.base_features)?;
    let frames = FrameMatrix::new(id.clone(), timestamps, values, spec.frame_rate_hz)?;
    Ok(SessionRecord {
        id,
        label,
        mmse,
        frames: Some(frames),
        utterances,
    })
}

/// Generates `n_sessions` sessions, exactly `round(n · ad_fraction)` of them AD.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let n_ad = (spec.n_sessions as f64 * spec.ad_fraction).round() as usize;
    let mut labels: Vec<Diagnosis> = (0..spec.n_sessions)
        .map(|i| if i < n_ad { Diagnosis::Ad } else { Diagnosis::NonAd })
        .collect();
    labels.shuffle(&mut rng);
    let width = spec.n_sessions.to_string().len().max(3);
    let sessions = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| session(format!("S{:0width$}", i + 1), label, spec, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { sessions })
}
