//! Mini-batch training with Adam and validation-loss early stopping.

use rand::seq::SliceRandom;
use rand::RngCore;

use super::adam::{adam_step, AdamState};
use super::kernels::{argmax, cross_entropy};
use super::network::{Architecture, MlpConfig, Network};
use super::{EpochRecord, Model, ModelVariant, NeuralError, TrainConfig};
use crate::rng::{derive_seed, stream_rng};
use crate::spectra::LabeledDataset;

const INIT_SALT: u64 = 0x1417;
const SPLIT_SALT: u64 = 0x5911;
const SHUFFLE_SALT: u64 = 0x54FF;
const DROPOUT_SALT: u64 = 0xD80F;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    NoImprovement,
    Stop,
}

/// Tracks the best validation loss and signals a stop after `patience`
/// consecutive epochs without strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    waited: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            waited: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.waited = 0;
            return StopDecision::Improved;
        }
        self.waited += 1;
        if self.waited >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::NoImprovement
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

/// Per-class split into (train, validation) row indices. Each class gives
/// `round(fraction * n)` rows to validation, capped so at least one stays in
/// training.
pub fn stratified_split(dataset: &LabeledDataset, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (class, mut rows) in dataset.indices_by_class().into_iter().enumerate() {
        let mut rng = stream_rng(derive_seed(seed, SPLIT_SALT), class as u64);
        rows.shuffle(&mut rng);
        let n_val = ((fraction * rows.len() as f64).round() as usize).min(rows.len().saturating_sub(1));
        val.extend_from_slice(&rows[..n_val]);
        train.extend_from_slice(&rows[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn check_dataset(dataset: &LabeledDataset, arch: &Architecture) -> Result<(), NeuralError> {
    if dataset.num_classes() < 2 {
        return Err(NeuralError::TooFewClasses(dataset.num_classes()));
    }
    if arch.num_classes() != dataset.num_classes() {
        return Err(NeuralError::DatasetMismatch(format!(
            "architecture has {} outputs, dataset has {} classes",
            arch.num_classes(),
            dataset.num_classes()
        )));
    }
    if arch.input_length() != dataset.grid.num_points {
        return Err(NeuralError::DatasetMismatch(format!(
            "architecture expects input length {}, dataset grid has {} points",
            arch.input_length(),
            dataset.grid.num_points
        )));
    }
    Ok(())
}

/// Trains `variant` on a stratified split of `dataset`.
///
/// The base CNN is built without dropout whatever `arch` says; the
/// uncertainty variant keeps the configured rate.
pub fn train(
    dataset: &LabeledDataset,
    arch: &Architecture,
    variant: ModelVariant,
    config: &TrainConfig,
) -> Result<Model, NeuralError> {
    config.validate()?;
    check_dataset(dataset, arch)?;
    let (train_idx, val_idx) = stratified_split(dataset, config.validation_fraction, config.seed);
    train_with_validation(&dataset.subset(&train_idx), &dataset.subset(&val_idx), arch, variant, config)
}

/// MLP baseline with the given hidden widths.
pub fn train_mlp(dataset: &LabeledDataset, hidden_layers: &[usize], config: &TrainConfig) -> Result<Model, NeuralError> {
    let arch = Architecture::Mlp(MlpConfig {
        hidden_layers: hidden_layers.to_vec(),
        ..MlpConfig::for_dataset(dataset)
    });
    train(dataset, &arch, ModelVariant::Mlp, config)
}

fn effective_architecture(arch: &Architecture, variant: ModelVariant) -> Architecture {
    let mut arch = arch.clone();
    if variant == ModelVariant::Cnn {
        arch.set_dropout_rate(0.0);
    }
    arch
}

/// Mean loss and accuracy of a dropout-free pass over `data`.
fn evaluate(net: &Network, data: &LabeledDataset) -> Result<(f64, f64), NeuralError> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, &y) in data.vectors.iter().zip(&data.labels) {
        let logits = net.forward(x, None)?;
        loss += cross_entropy(&logits, y).0;
        if argmax(&logits) == y {
            correct += 1;
        }
    }
    let n = data.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Trains on `train_set`, early-stopping on `val_set`, and returns the
/// parameters of the best validation epoch. An empty validation set falls
/// back to the epoch's mean training loss.
pub fn train_with_validation(
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    arch: &Architecture,
    variant: ModelVariant,
    config: &TrainConfig,
) -> Result<Model, NeuralError> {
    config.validate()?;
    check_dataset(train_set, arch)?;
    if let Some(missing) = train_set.class_counts().iter().position(|&n| n == 0) {
        return Err(NeuralError::DegenerateSplit(train_set.class_names[missing].clone()));
    }

    let arch = effective_architecture(arch, variant);
    let mut net = Network::init(arch, &mut stream_rng(derive_seed(config.seed, INIT_SALT), 0))?;
    let mut adam = AdamState::new(&net.params);
    let adam_config = config.adam();
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best_params = net.params.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut step = 0u64;

    for epoch in 1..=config.max_epochs {
        order.sort_unstable();
        order.shuffle(&mut stream_rng(derive_seed(config.seed, SHUFFLE_SALT), epoch as u64));
        let mut dropout_rng = stream_rng(derive_seed(config.seed, DROPOUT_SALT), epoch as u64);
        let mut total_loss = 0.0;

        for batch in order.chunks(config.batch_size) {
            let mut grads = net.zero_grads();
            for &i in batch {
                total_loss += net.loss_and_grad(
                    &train_set.vectors[i],
                    train_set.labels[i],
                    Some(&mut dropout_rng as &mut dyn RngCore),
                    &mut grads,
                )?;
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().flatten().for_each(|g| *g *= scale);
            step += 1;
            adam_step(&mut net.params, &grads, &mut adam, step, &adam_config);
        }

        let train_loss = total_loss / train_set.len() as f64;
        let (val_loss, val_accuracy) = if val_set.is_empty() {
            (train_loss, None)
        } else {
            let (loss, acc) = evaluate(&net, val_set)?;
            (loss, Some(acc))
        };
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(NeuralError::Diverged(epoch));
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        });
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best_params.clone_from(&net.params),
            StopDecision::NoImprovement => {}
            StopDecision::Stop => break,
        }
    }

    net.params = best_params;
    Ok(Model {
        variant,
        network: net,
        class_names: train_set.class_names.clone(),
        grid: train_set.grid,
        history,
        best_epoch: stopper.best_epoch(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::GridSpec;

    #[test]
    fn early_stopping_counts_patience() {
        let mut es = EarlyStopping::new(3);
        assert_eq!(es.observe(1, 1.0), StopDecision::Improved);
        assert_eq!(es.observe(2, 1.0), StopDecision::NoImprovement);
        assert_eq!(es.observe(3, 0.5), StopDecision::Improved);
        assert_eq!(es.observe(4, 0.6), StopDecision::NoImprovement);
        assert_eq!(es.observe(5, 0.7), StopDecision::NoImprovement);
        assert_eq!(es.observe(6, 0.8), StopDecision::Stop);
        assert_eq!(es.best_epoch(), 3);
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let grid = GridSpec::new(0.0, 1.0, 2).unwrap();
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let ds = LabeledDataset::new(vec![vec![0.0, 0.0]; 30], labels, vec!["a".into(), "b".into(), "c".into()], grid).unwrap();
        let (tr, va) = stratified_split(&ds, 0.2, 4);
        assert_eq!(va.len(), 6);
        assert_eq!(tr.len(), 24);
        for c in 0..3 {
            assert_eq!(va.iter().filter(|&&i| ds.labels[i] == c).count(), 2);
        }
        assert_eq!(stratified_split(&ds, 0.2, 4), (tr, va));
    }

    #[test]
    fn singleton_class_stays_in_training() {
        let grid = GridSpec::new(0.0, 1.0, 2).unwrap();
        let ds = LabeledDataset::new(vec![vec![0.0, 0.0]; 3], vec![0, 0, 1], vec!["a".into(), "b".into()], grid).unwrap();
        let (tr, _) = stratified_split(&ds, 0.5, 0);
        assert!(tr.contains(&2));
    }

    #[test]
    fn absent_class_is_a_degenerate_split() {
        let grid = GridSpec::new(0.0, 100.0, 32).unwrap();
        let ds = LabeledDataset::new(vec![vec![0.5; 32]; 4], vec![0; 4], vec!["a".into(), "b".into()], grid).unwrap();
        let arch = Architecture::Mlp(MlpConfig {
            hidden_layers: vec![],
            ..MlpConfig::for_dataset(&ds)
        });
        let err = train(&ds, &arch, ModelVariant::Mlp, &TrainConfig::default()).unwrap_err();
        assert_eq!(err, NeuralError::DegenerateSplit("b".into()));
    }
}
