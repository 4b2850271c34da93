//! Mineral classifiers trained from scratch: a two-stage 1D-CNN, its Monte
//! Carlo dropout variant, and a dense MLP baseline.
//!
//! All three share the kernels in [`kernels`], the Adam optimiser and the
//! training loop. Training is single-threaded and fully determined by
//! [`TrainConfig::seed`].

pub mod adam;
pub mod checkpoint;
pub mod kernels;
pub mod network;
pub mod predict;
pub mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectra::{GridSpec, LabeledDataset};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointError};
pub use kernels::{cross_entropy, softmax};
pub use network::{Architecture, CnnConfig, ForwardTrace, MlpConfig, Network, Param};
pub use predict::{accuracy, mc_predict, mc_predict_indexed, predict, PredictedLabel, Prediction};
pub use train::{stratified_split, train, train_mlp, train_with_validation, EarlyStopping, StopDecision};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("input has length {got}, model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("class {0:?} has no samples in the training split")]
    DegenerateSplit(String),
    #[error("training needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("dataset and model disagree: {0}")]
    DatasetMismatch(String),
    #[error("training diverged at epoch {0} (non-finite loss)")]
    Diverged(usize),
}

/// Which of the three classifiers a model is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Base 1D-CNN: no dropout layers.
    Cnn,
    /// 1D-CNN with dropout after both conv stages and the first dense layer,
    /// kept active at inference for Monte Carlo estimates.
    CnnUncertainty,
    /// Dense baseline.
    Mlp,
}

impl ModelVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cnn => "cnn",
            Self::CnnUncertainty => "cnn-unk",
            Self::Mlp => "mlp",
        }
    }

    pub fn uncertainty_aware(self) -> bool {
        matches!(self, Self::CnnUncertainty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before training stops.
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    pub mc_passes: usize,
    /// Uncertainty mode reports UNKNOWN when the largest mean probability is below this.
    pub unknown_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 200,
            patience: 20,
            validation_fraction: 0.2,
            seed: 0,
            mc_passes: 30,
            unknown_threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidTrainConfig(m.to_string()));
        if self.patience < 1 {
            return bad("patience must be >= 1");
        }
        if self.mc_passes < 1 {
            return bad("mc_passes must be >= 1");
        }
        if self.batch_size < 1 || self.max_epochs < 1 {
            return bad("batch_size and max_epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_epsilon <= 0.0 {
            return bad("Adam betas must lie in [0, 1) and epsilon must be positive");
        }
        if !(0.0..=1.0).contains(&self.unknown_threshold) {
            return bad("unknown_threshold must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// `None` when there was no validation set.
    pub val_accuracy: Option<f64>,
}

/// A trained classifier with the class list and grid it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub variant: ModelVariant,
    pub network: Network,
    pub class_names: Vec<String>,
    pub grid: GridSpec,
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (1-based; 0 if untrained).
    pub best_epoch: usize,
}

impl Model {
    /// Untrained model with zero parameters; mostly useful for tests.
    pub fn from_network(variant: ModelVariant, network: Network, class_names: Vec<String>, grid: GridSpec) -> Self {
        Self {
            variant,
            network,
            class_names,
            grid,
            history: Vec::new(),
            best_epoch: 0,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn label_name(&self, label: PredictedLabel) -> &str {
        match label {
            PredictedLabel::Class(i) => &self.class_names[i],
            PredictedLabel::Unknown => crate::UNKNOWN_LABEL,
        }
    }

    pub fn best_val_loss(&self) -> Option<f64> {
        self.history
            .iter()
            .find(|r| r.epoch == self.best_epoch)
            .map(|r| r.val_loss)
    }
}

impl CnnConfig {
    /// Default architecture sized for `dataset`'s grid and class list.
    pub fn for_dataset(dataset: &LabeledDataset) -> Self {
        Self {
            input_length: dataset.grid.num_points,
            num_classes: dataset.num_classes(),
            ..Self::default()
        }
    }
}

impl MlpConfig {
    pub fn for_dataset(dataset: &LabeledDataset) -> Self {
        Self {
            input_length: dataset.grid.num_points,
            num_classes: dataset.num_classes(),
            ..Self::default()
        }
    }
}
