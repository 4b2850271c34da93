//! Deterministic and Monte Carlo dropout inference.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::kernels::{argmax, softmax};
use super::{Model, NeuralError, TrainConfig};
use crate::rng::{derive_seed, stream_rng};
use crate::spectra::LabeledDataset;

const MC_SALT: u64 = 0x3C_D40F;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictedLabel {
    Class(usize),
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean_probs: Vec<f64>,
    /// Per-class population variance of the softmax over passes.
    pub variance: Vec<f64>,
    pub label: PredictedLabel,
    pub max_mean_prob: f64,
}

/// Single dropout-free pass. Never reports UNKNOWN.
pub fn predict(model: &Model, input: &[f64]) -> Result<Prediction, NeuralError> {
    let probs = softmax(&model.network.forward(input, None)?);
    let best = argmax(&probs);
    Ok(Prediction {
        max_mean_prob: probs[best],
        variance: vec![0.0; probs.len()],
        mean_probs: probs,
        label: PredictedLabel::Class(best),
    })
}

/// Monte Carlo dropout prediction for a lone input (stream base 0).
pub fn mc_predict(model: &Model, input: &[f64], config: &TrainConfig) -> Result<Prediction, NeuralError> {
    mc_predict_indexed(model, input, config, 0)
}

/// Monte Carlo dropout prediction for the `input_index`-th input of a batch.
///
/// Pass `p` draws its dropout masks from stream
/// `input_index * mc_passes + p`, so batch results do not depend on order.
/// The label is UNKNOWN when the largest mean probability is below
/// `config.unknown_threshold`.
pub fn mc_predict_indexed(
    model: &Model,
    input: &[f64],
    config: &TrainConfig,
    input_index: u64,
) -> Result<Prediction, NeuralError> {
    let passes = config.mc_passes.max(1);
    let k = model.network.num_classes();
    let seed = derive_seed(config.seed, MC_SALT);
    // Welford accumulation: identical passes give a variance of exactly zero.
    let mut mean = vec![0.0; k];
    let mut m2 = vec![0.0; k];
    for p in 0..passes {
        let mut rng = stream_rng(seed, input_index * passes as u64 + p as u64);
        let probs = softmax(&model.network.forward(input, Some(&mut rng as &mut dyn RngCore))?);
        let n = (p + 1) as f64;
        for c in 0..k {
            let delta = probs[c] - mean[c];
            mean[c] += delta / n;
            m2[c] += delta * (probs[c] - mean[c]);
        }
    }
    let variance: Vec<f64> = m2.iter().map(|v| (v / passes as f64).max(0.0)).collect();
    let best = argmax(&mean);
    let max_mean_prob = mean[best];
    let label = if max_mean_prob < config.unknown_threshold {
        PredictedLabel::Unknown
    } else {
        PredictedLabel::Class(best)
    };
    Ok(Prediction {
        mean_probs: mean,
        variance,
        label,
        max_mean_prob,
    })
}

/// Fraction of rows whose predicted label equals the true label. With
/// `mc` set, Monte Carlo prediction is used and UNKNOWN counts as wrong.
pub fn accuracy(model: &Model, data: &LabeledDataset, mc: Option<&TrainConfig>) -> Result<f64, NeuralError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (i, (x, &y)) in data.vectors.iter().zip(&data.labels).enumerate() {
        let pred = match mc {
            Some(cfg) => mc_predict_indexed(model, x, cfg, i as u64)?,
            None => predict(model, x)?,
        };
        if pred.label == PredictedLabel::Class(y) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
