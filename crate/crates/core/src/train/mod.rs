//! Deeply supervised training: ground truth, loss, optimizer and loop.

pub mod adam;
pub mod augment;
pub mod config;
pub mod gt;
pub mod loss;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use augment::{augment, random_crop, AugmentPolicy, Sample};
pub use config::{lr_at, DatasetProfile, TrainConfig, INITIAL_LR};
pub use gt::{consensus_gt, Label, TriStateGroundTruth};
pub use loss::{balanced_bce_loss, balanced_targets, total_loss, LossTerms, NEGATIVE_TERM_SCALE};
pub use trainer::{evaluate_loss, train, EpochEnd, LossLog, StepRecord};
