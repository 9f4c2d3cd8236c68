//! Fixed-shape windows over per-session sequences and text-to-audio window
//! alignment.

use serde::{Deserialize, Serialize};

use crate::data::{Diagnosis, Modality};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub timestep: usize,
    pub stride: usize,
}

impl WindowSpec {
    pub fn new(timestep: usize, stride: usize) -> Result<Self> {
        let spec = WindowSpec { timestep, stride };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.timestep == 0 || self.stride == 0 {
            return Err(Error::config(format!(
                "window timestep ({}) and stride ({}) must be >= 1",
                self.timestep, self.stride
            )));
        }
        Ok(())
    }

    /// Number of windows produced for a sequence of `len` rows.
    pub fn count(&self, len: usize) -> usize {
        if len >= self.timestep {
            (len - self.timestep) / self.stride + 1
        } else {
            1
        }
    }
}

/// Cuts `seq` into `timestep`-row windows starting at 0, s, 2s, …
///
/// Sequences shorter than the timestep (including empty ones) give a single
/// window, zero-padded at the end.
pub fn window(seq: &Matrix, spec: WindowSpec) -> Vec<Matrix> {
    let n = spec.count(seq.rows());
    (0..n)
        .map(|k| seq.row_window(k * spec.stride, spec.timestep))
        .collect()
}

/// For each audio window, the index of the text window it is paired with:
/// `round(i * (n_t − 1) / (n_a − 1))`, ties to even.
pub fn align_modalities(n_audio: usize, n_text: usize) -> Result<Vec<usize>> {
    if n_audio == 0 || n_text == 0 {
        return Err(Error::data("session missing modality"));
    }
    if n_audio == 1 {
        return Ok(vec![0]);
    }
    let den = n_audio - 1;
    Ok((0..n_audio)
        .map(|i| {
            let num = i * (n_text - 1);
            let (q, r) = (num / den, num % den);
            match (2 * r).cmp(&den) {
                std::cmp::Ordering::Greater => q + 1,
                std::cmp::Ordering::Equal => q + (q & 1),
                std::cmp::Ordering::Less => q,
            }
        })
        .collect())
}

/// One model input: aligned audio and text windows of one session. A window
/// is `None` when its modality is not modelled.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowPair {
    pub session_id: String,
    pub audio: Option<Matrix>,
    pub text: Option<Matrix>,
    pub label: Diagnosis,
    pub mmse: f64,
}

/// Windowed sequences for one session, ready for pairing.
#[derive(Clone, Debug)]
pub struct SessionSequences<'a> {
    pub session_id: &'a str,
    pub label: Diagnosis,
    pub mmse: f64,
    pub audio: Option<&'a Matrix>,
    pub text: Option<&'a Matrix>,
}

/// Builds the window pairs of one session.
///
/// With both modalities the audio windows drive the pairing and text windows
/// are mapped onto them with [`align_modalities`]; a unimodal model gets one
/// pair per window of its modality.
pub fn build_pairs(
    session: &SessionSequences<'_>,
    audio_spec: WindowSpec,
    text_spec: WindowSpec,
    modality: Modality,
) -> Result<Vec<WindowPair>> {
    if !(0.0..=30.0).contains(&session.mmse) {
        return Err(Error::data(format!(
            "{}: MMSE {} outside [0, 30]",
            session.session_id, session.mmse
        )));
    }
    let audio_windows = if modality.uses_audio() {
        let seq = session
            .audio
            .ok_or_else(|| Error::data(format!("{}: session missing modality audio", session.session_id)))?;
        Some(window(seq, audio_spec))
    } else {
        None
    };
    let text_windows = if modality.uses_text() {
        let seq = session
            .text
            .ok_or_else(|| Error::data(format!("{}: session missing modality text", session.session_id)))?;
        Some(window(seq, text_spec))
    } else {
        None
    };

    let make = |audio: Option<Matrix>, text: Option<Matrix>| WindowPair {
        session_id: session.session_id.to_string(),
        audio,
        text,
        label: session.label,
        mmse: session.mmse,
    };

    Ok(match (audio_windows, text_windows) {
        (Some(a), Some(t)) => {
            let idx = align_modalities(a.len(), t.len())?;
            a.into_iter()
                .zip(idx)
                .map(|(aw, ti)| make(Some(aw), Some(t[ti].clone())))
                .collect()
        }
        (Some(a), None) => a.into_iter().map(|aw| make(Some(aw), None)).collect(),
        (None, Some(t)) => t.into_iter().map(|tw| make(None, Some(tw))).collect(),
        (None, None) => unreachable!("modality always selects at least one branch"),
    })
}
