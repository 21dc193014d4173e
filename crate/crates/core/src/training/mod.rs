//! Binary cross-entropy training with Adam, seeded mini-batching, and
//! per-epoch metrics.

pub mod log;
pub mod loss;
pub mod metrics;
pub mod optim;
pub mod trainer;

pub use log::{format_sig, EpochRecord, TrainLog, TRAIN_LOG_HEADER};
pub use loss::{bce_loss, BCE_CLAMP};
pub use metrics::{evaluate, Metrics, DEFAULT_THRESHOLD};
pub use optim::{adam_step, adam_update, AdamState};
pub use trainer::{batch_gradient, fit, input_tensor, train_epoch, EpochMetrics, IMPROVEMENT_TOLERANCE, REDUCE_CHUNK};

use crate::nn::NnError;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Stop once validation loss has not improved by 1e-4 for this many
    /// epochs. `None` runs every epoch.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 100,
            seed: 0,
            patience: None,
        }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted (it freezes the parameters).
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::InvalidConfig(msg));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be finite and non-negative", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} {b} outside [0, 1)"));
            }
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.patience == Some(0) {
            return bad("patience must be at least 1".into());
        }
        Ok(())
    }
}

/// SplitMix64 finalizer over `a` then `b`; derives independent seeds from a
/// base seed and small indices.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    fn finalize(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    finalize(finalize(a.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset row width {width} does not fit model input {shape:?}")]
    InputMismatch { width: usize, shape: Vec<usize> },
    #[error(transparent)]
    Nn(#[from] NnError),
}
