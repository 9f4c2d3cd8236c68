//! Gated multimodal fusion of speech audio and transcripts for predicting
//! Alzheimer's-type cognitive impairment (AD vs non-AD) and MMSE scores.
//!
//! Audio frame features and word embeddings, optionally extended with
//! disfluency tags, are cut into aligned sliding windows. Each modality runs
//! through its own BiLSTM branch; the concatenated branch outputs pass a
//! projection and a stack of highway layers before the classification and
//! regression heads. Window predictions are averaged per session.
//!
//! Everything is f64 and written from scratch on top of [`numcore`], with
//! hand-derived gradients.

pub mod app;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod disfluency;
pub mod error;
pub mod featurize;
pub mod model;
pub mod numcore;
pub mod pipeline;
pub mod sequencing;
pub mod synth;
pub mod train_eval;

pub use error::{Error, Result};
