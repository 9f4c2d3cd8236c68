//! Losses, the training loop, cross-validation splits and session-level
//! evaluation metrics.

pub mod cv;
pub mod loss;
pub mod metrics;
pub mod train;

pub use cv::{fold_indices, split_cv, split_holdout};
pub use loss::{bce_grad, bce_loss, mse, rmse, squared_error};
pub use metrics::{compute_metrics, confusion, round4, ClassMetrics, ConfusionCounts, MetricsReport};
pub use train::{
    evaluate, read_history, report_from_outputs, session_outputs, train, write_history, EpochRecord, SessionOutput,
    TrainConfig, TrainOutcome, MMSE_NORMAL_MIN,
};
