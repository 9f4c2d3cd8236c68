//! Gated multimodal fusion network: per-modality (bi)LSTM branches, a
//! projection of their concatenated final states, a block of highway layers
//! and classification / regression heads.

mod branch;
mod fusion;
mod highway;
mod lstm;

pub use branch::{branch_backward, branch_forward, BiLayer, BranchCache, BranchConfig, BranchParams};
pub use fusion::{
    aggregate_session, fused_forward, predict_session, ForwardCache, FusionParams, ModelConfig, SessionPrediction, Task,
    DEFAULT_FORGET_BIAS, DEFAULT_FUSION_DIM, DEFAULT_HIGHWAY_DEPTH,
};
pub use highway::{highway_forward, HighwayCache, HighwayLayer, DEFAULT_GATE_BIAS};
pub use lstm::{lstm_cell_step, lstm_sequence, lstm_sequence_backward, LstmParams, StepCache};
