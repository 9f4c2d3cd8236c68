//! TOML run configuration.
//!
//! ```toml
//! [paths]
//! data_dir = "data"          # labels.csv, transcripts.jsonl, features/
//! embeddings = "glove.txt"   # omit for a seeded synthetic table
//! out_dir = "runs/demo"
//!
//! [features]
//! modality = "both"          # audio | text | both
//! disfluency = true
//!
//! [model]
//! task = "both"              # cls | reg | both
//! fusion_dim = 128
//!
//! [model.audio]             # a branch table must list all five keys
//! layers = 4
//! hidden = 256
//! bidirectional = true
//! timestep = 20
//! stride = 1
//!
//! [train]
//! epochs = 200
//! seed = 7
//! ```
//!
//! Every key is optional; missing keys take the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{DatasetPaths, Modality};
use crate::error::{Error, Result};
use crate::featurize::{DEFAULT_ALPHA, DEFAULT_EMBEDDING_DIM, DEFAULT_FRAME_RATE_HZ};
use crate::model::{
    BranchConfig, ModelConfig, Task, DEFAULT_FORGET_BIAS, DEFAULT_FUSION_DIM, DEFAULT_GATE_BIAS, DEFAULT_HIGHWAY_DEPTH,
};
use crate::pipeline::FitOptions;
use crate::synth::SyntheticSpec;
use crate::train_eval::TrainConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub features: FeaturesConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub synth: SyntheticSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub data_dir: PathBuf,
    /// Override of `<data_dir>/features`.
    pub features_dir: Option<PathBuf>,
    /// Override of `<data_dir>/transcripts.jsonl`.
    pub transcripts: Option<PathBuf>,
    /// Override of `<data_dir>/labels.csv`.
    pub labels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            data_dir: PathBuf::from("data"),
            features_dir: None,
            transcripts: None,
            labels: None,
            embeddings: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl PathsConfig {
    pub fn dataset(&self) -> DatasetPaths {
        let d = DatasetPaths::in_dir(&self.data_dir);
        DatasetPaths {
            features_dir: self.features_dir.clone().unwrap_or(d.features_dir),
            transcripts: self.transcripts.clone().unwrap_or(d.transcripts),
            labels: self.labels.clone().unwrap_or(d.labels),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub modality: Modality,
    pub disfluency: bool,
    pub alpha: f64,
    /// Dimension of the synthetic table when no embedding file is given.
    pub embedding_dim: usize,
    /// Seed of the synthetic embedding table.
    pub embedding_seed: u64,
    pub frame_rate_hz: f64,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig {
            modality: Modality::Both,
            disfluency: true,
            alpha: DEFAULT_ALPHA,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            embedding_seed: 0,
            frame_rate_hz: DEFAULT_FRAME_RATE_HZ,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskSet {
    Cls,
    Reg,
    #[default]
    Both,
}

impl TaskSet {
    pub fn tasks(self) -> Vec<Task> {
        match self {
            TaskSet::Cls => vec![Task::Cls],
            TaskSet::Reg => vec![Task::Reg],
            TaskSet::Both => vec![Task::Cls, Task::Reg],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub task: TaskSet,
    pub fusion_dim: usize,
    pub highway_depth: usize,
    pub gate_bias_init: f64,
    pub forget_bias_init: f64,
    pub dropout: f64,
    pub audio: BranchConfig,
    pub text: BranchConfig,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            task: TaskSet::Both,
            fusion_dim: DEFAULT_FUSION_DIM,
            highway_depth: DEFAULT_HIGHWAY_DEPTH,
            gate_bias_init: DEFAULT_GATE_BIAS,
            forget_bias_init: DEFAULT_FORGET_BIAS,
            dropout: 0.0,
            audio: BranchConfig::audio_default(),
            text: BranchConfig::text_default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `--seed`: training, weight init, splits and generation.
    pub fn set_seed(&mut self, seed: u64) {
        self.train.seed = seed;
        self.synth.seed = seed;
    }

    /// Model shapes with input widths left at 0 (filled in after fitting).
    pub fn model_config(&self) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            modality: self.features.modality,
            audio: m.audio,
            text: m.text,
            audio_input_dim: 0,
            text_input_dim: 0,
            fusion_dim: m.fusion_dim,
            highway_depth: m.highway_depth,
            gate_bias_init: m.gate_bias_init,
            forget_bias_init: m.forget_bias_init,
            dropout: m.dropout,
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        let mut o = FitOptions::new(
            self.model_config(),
            self.train.clone(),
            self.model.task.tasks(),
            self.features.disfluency,
            self.train.seed,
        );
        o.alpha = self.features.alpha;
        o
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.features;
        if f.disfluency && !f.modality.uses_text() {
            return Err(Error::config("features.disfluency requires the text modality"));
        }
        if !(f.alpha > 0.0 && f.alpha < 1.0) {
            return Err(Error::config("features.alpha must lie in (0, 1)"));
        }
        if f.embedding_dim == 0 || !(f.frame_rate_hz > 0.0) {
            return Err(Error::config("features.embedding_dim and frame_rate_hz must be positive"));
        }
        let m = &self.model;
        if f.modality.uses_audio() {
            m.audio.validate("audio")?;
        }
        if f.modality.uses_text() {
            m.text.validate("text")?;
        }
        if m.fusion_dim == 0 {
            return Err(Error::config("model.fusion_dim must be >= 1"));
        }
        if !(0.0..1.0).contains(&m.dropout) {
            return Err(Error::config("model.dropout must lie in [0, 1)"));
        }
        self.train.validate()
    }
}
