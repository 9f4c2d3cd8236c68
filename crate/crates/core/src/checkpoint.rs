//! Versioned, checksummed model files.
//!
//! Layout: a one-line JSON header `{"format_version":1,"sha256":"…"}` followed
//! by the JSON payload. The checksum covers the payload bytes. Floats are
//! written in shortest round-trip form, so save/load is bit-exact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::featurize::EmbeddingTable;
use crate::model::FusionParams;
use crate::pipeline::{text_width, ModelBundle};

pub const FORMAT_VERSION: u32 = 1;

/// Where the word vectors came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbeddingSource {
    File { path: PathBuf, dim: usize, fingerprint: String },
    Synthetic { seed: u64, dim: usize },
}

impl EmbeddingSource {
    pub fn dim(&self) -> usize {
        match self {
            EmbeddingSource::File { dim, .. } | EmbeddingSource::Synthetic { dim, .. } => *dim,
        }
    }

    /// Loads the file, or regenerates the synthetic table over `vocab`. A
    /// file whose contents changed since training is rejected.
    pub fn resolve<S: AsRef<str>>(&self, vocab: &[S]) -> Result<EmbeddingTable> {
        match self {
            EmbeddingSource::File { path, dim, fingerprint } => {
                let t = EmbeddingTable::load(path)?;
                if t.dim() != *dim {
                    return Err(Error::config(format!(
                        "embeddings: {} has dim {}, model expects {dim}",
                        path.display(),
                        t.dim()
                    )));
                }
                if &t.fingerprint() != fingerprint {
                    return Err(Error::config(format!(
                        "embeddings: {} differs from the table used in training",
                        path.display()
                    )));
                }
                Ok(t)
            }
            EmbeddingSource::Synthetic { seed, dim } => Ok(EmbeddingTable::synthetic(*seed, *dim, vocab)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub seed: u64,
    pub embedding: EmbeddingSource,
    pub bundle: ModelBundle,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    sha256: String,
}

impl Checkpoint {
    /// Consistency of the feature transforms with the model dimensions.
    pub fn validate(&self) -> Result<()> {
        let b = &self.bundle;
        let models: Vec<&FusionParams> = b.cls.iter().chain(b.reg.iter()).collect();
        if models.is_empty() {
            return Err(Error::config("checkpoint holds no model"));
        }
        if b.disfluency && !b.modality.uses_text() {
            return Err(Error::config("checkpoint: disfluency flag without text modality"));
        }
        if b.modality.uses_text() && b.text_dim != text_width(self.embedding.dim(), b.disfluency) {
            return Err(Error::config(format!(
                "checkpoint: text width {} does not match embedding dim {}",
                b.text_dim,
                self.embedding.dim()
            )));
        }
        if let Some(a) = &b.audio {
            if a.keep_mask.len() != a.zscore.dim() {
                return Err(Error::config("checkpoint: keep_mask and normalizer disagree"));
            }
        }
        for p in models {
            p.validate()?;
            let c = &p.config;
            if c.modality != b.modality {
                return Err(Error::config("checkpoint: model modality differs from feature modality"));
            }
            let audio_dim = b.audio.as_ref().map_or(0, |a| a.output_dim());
            if c.modality.uses_audio() && c.audio_input_dim != audio_dim {
                return Err(Error::config(format!(
                    "checkpoint: audio branch takes {} features, keep_mask selects {audio_dim}",
                    c.audio_input_dim
                )));
            }
            if c.modality.uses_text() && c.text_input_dim != b.text_dim {
                return Err(Error::config("checkpoint: text branch width differs from text features"));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let payload = serde_json::to_vec(self).map_err(|e| Error::data(format!("serializing checkpoint: {e}")))?;
        let header = Header {
            format_version: FORMAT_VERSION,
            sha256: hex::encode(Sha256::digest(&payload)),
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::data("checkpoint: missing header"))?;
        let header: Header =
            serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::data(format!("checkpoint header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::data(format!(
                "checkpoint format {} is not supported (expected {FORMAT_VERSION})",
                header.format_version
            )));
        }
        let payload = &bytes[nl + 1..];
        if hex::encode(Sha256::digest(payload)) != header.sha256 {
            return Err(Error::data("checkpoint: checksum mismatch (file is corrupted)"));
        }
        let ckpt: Checkpoint =
            serde_json::from_slice(payload).map_err(|e| Error::data(format!("checkpoint payload: {e}")))?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    /// Writes to a sibling temporary file first, so a failed save never
    /// leaves a partial checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
