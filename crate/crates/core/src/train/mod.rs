//! Pretraining, fine-tuning, leave-one-participant-out evaluation and
//! feature importance.

mod config;
mod importance;
mod loocv;
mod pipeline;
mod predict;
mod report;

use thiserror::Error;

pub use config::{Profile, TrainConfig};
pub use importance::{feature_importance, permute_group, ImportanceResult};
pub use loocv::{group_by_participant, loocv, loocv_with, FoldResult};
pub use pipeline::{finetune, pretrain, train_from_scratch, EpochLog, TrainOutcome, WARMUP_STEPS};
pub use predict::{
    evaluate, peak_comparison, predict_trial, stride_peaks, Evaluation, Predictor, TrainedModel, ZeroPredictor,
};
pub use report::EvalReport;

use crate::data::DataError;
use crate::loss::LossError;
use crate::metrics::MetricsError;
use crate::nn::NnError;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("need at least {needed} participants, got {got}")]
    TooFewParticipants { needed: usize, got: usize },
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),
    #[error("training diverged at epoch {epoch}, step {step}: torque loss {torque_loss}, stance loss {stance_loss}")]
    Diverged { epoch: usize, step: u64, torque_loss: f64, stance_loss: f64 },
}
