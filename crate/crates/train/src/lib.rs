//! Training and inference for the joint parsing/pose network: targets,
//! losses, augmentation, the joint and structure-sensitive training loops,
//! multi-scale flip-averaged prediction and archive evaluation.

pub mod augment;
pub mod config;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod infer;
pub mod losses;
pub mod optim;
pub mod targets;
pub mod trainer;

pub use config::TrainConfig;
pub use error::TrainError;
pub use eval::{evaluate_archive, EvalReport};
pub use infer::{batch_predict, export_ground_truth, predict, InferConfig, Prediction, Resolution, StageModel};
pub use losses::{total_loss, LossBreakdown, LossMode, Targets};
pub use trainer::{load_model, save_model, train_jppnet, train_ssjppnet, EpochRecord, Phase, RunOptions, TrainMode, TrainOutcome};
