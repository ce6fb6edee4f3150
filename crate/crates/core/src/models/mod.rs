//! The residual denoiser, the confidence predictor, their training data and
//! training loops.

mod confidence;
mod dataset;
mod denoiser;
mod stats;
mod train;

pub use confidence::{
    confidence_ground_truth, confidence_input, predict_confidence, ConfidenceNetSpec, REGION,
};
pub use dataset::{build_dataset, read_item, sample_item_noise, write_item, Dataset, DatasetItem, ItemOrigin, DATA_MAGIC, DATA_VERSION};
pub use denoiser::{denoise_dnn, Denoiser, DenoiserSpec};
pub use stats::{confidence_stats, ConfidenceStats, Summary};
pub use train::{
    constant_baseline_loss, evaluate_confidence, split_indices, train_confidence, train_denoiser, ConfidenceTraining,
    DenoiserTraining, TrainedDenoiser,
};
