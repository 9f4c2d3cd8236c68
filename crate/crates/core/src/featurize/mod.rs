//! Audio and lexical feature extraction: per-segment statistics of frame-level
//! descriptors, z-score normalization, significance-based feature selection and
//! word-embedding lookup.

mod embedding;
mod frames;
mod normalize;
mod select;
mod stats;

pub use embedding::{embed_tokens, EmbeddingTable, DEFAULT_EMBEDDING_DIM};
pub use frames::{FrameMatrix, DEFAULT_BASE_FEATURES, DEFAULT_FRAME_RATE_HZ};
pub use normalize::{zscore_fit_apply, ZScore};
pub use select::{correlation_p_value, pearson, select_features, DEFAULT_ALPHA};
pub use stats::{column_stats, segment_stats, stats_header, Stat, STATS_PER_FEATURE};
