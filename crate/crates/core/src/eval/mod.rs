//! Cross-validation, confusion matrices and the golden expert-system suite.

mod golden;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::{mc_predict_indexed, predict, train, Architecture, ModelVariant, NeuralError, TrainConfig};
use crate::rng::{derive_seed, stream_rng};
use crate::spectra::LabeledDataset;

pub use golden::{
    embedded_fixture, load_golden_fixture, parse_golden_fixture, run_golden_cases, run_golden_suite, GoldenCase,
    GoldenOutcome, GoldenReport, GOLDEN_FIXTURE_VERSION,
};

const KFOLD_SALT: u64 = 0x6F01D;
const CV_SALT: u64 = 0xC5_0A11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("class {class:?} has {have} samples, fewer than k = {k}")]
    ClassTooSmall { class: String, have: usize, k: usize },
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("confusion counts must form a square matrix matching {0} class names")]
    BadMatrix(usize),
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: NeuralError },
    #[error("golden fixture not found: {0}")]
    FixtureMissing(String),
    #[error("golden fixture corrupt: {0}")]
    FixtureCorrupt(String),
}

/// Train and test row indices of one fold.
pub type FoldIndices = (Vec<usize>, Vec<usize>);

/// Stratified k-fold partition as (train, test) index lists, one per fold.
///
/// Each class is shuffled on its own stream and dealt round-robin, starting
/// where the previous class stopped so fold sizes stay balanced.
pub fn kfold_split(dataset: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<FoldIndices>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    let by_class = dataset.indices_by_class();
    for (c, rows) in by_class.iter().enumerate() {
        if rows.len() < k {
            return Err(EvalError::ClassTooSmall {
                class: dataset.class_names[c].clone(),
                have: rows.len(),
                k,
            });
        }
    }
    let mut test_folds = vec![Vec::new(); k];
    let mut offset = 0;
    for (c, mut rows) in by_class.into_iter().enumerate() {
        rows.shuffle(&mut stream_rng(derive_seed(seed, KFOLD_SALT), c as u64));
        for (j, row) in rows.iter().enumerate() {
            test_folds[(offset + j) % k].push(*row);
        }
        offset += rows.len();
    }
    Ok(test_folds
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train = (0..dataset.len()).filter(|i| test.binary_search(i).is_err()).collect();
            (train, test)
        })
        .collect())
}

/// Rows are true labels, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(class_names: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let n = class_names.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(EvalError::BadMatrix(n));
        }
        Ok(Self { class_names, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Element-wise sum; both matrices must share the class axis.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<(), EvalError> {
        if other.class_names != self.class_names {
            return Err(EvalError::BadMatrix(self.class_names.len()));
        }
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(orow) {
                *a += b;
            }
        }
        Ok(())
    }

    /// Tab-separated matrix with a header row, ready for a heat-map plot.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in &self.class_names {
            s.push('\t');
            s.push_str(c);
        }
        s.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            s.push_str(name);
            for v in row {
                let _ = write!(s, "\t{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Builds the matrix over `class_names` plus any other label seen (such as
/// "other" or UNKNOWN), the extras appended in sorted order.
pub fn confusion<S: AsRef<str>>(
    true_labels: &[S],
    predicted_labels: &[S],
    class_names: &[String],
) -> Result<ConfusionMatrix, EvalError> {
    if true_labels.len() != predicted_labels.len() {
        return Err(EvalError::LengthMismatch {
            truth: true_labels.len(),
            predicted: predicted_labels.len(),
        });
    }
    let mut axis: Vec<String> = class_names.to_vec();
    let mut extras: Vec<String> = true_labels
        .iter()
        .chain(predicted_labels)
        .map(|l| l.as_ref().to_string())
        .filter(|l| !class_names.contains(l))
        .collect();
    extras.sort();
    extras.dedup();
    axis.extend(extras);
    let pos: BTreeMap<&str, usize> = axis.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let n = axis.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (t, p) in true_labels.iter().zip(predicted_labels) {
        counts[pos[t.as_ref()]][pos[p.as_ref()]] += 1;
    }
    Ok(ConfusionMatrix {
        class_names: axis,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_name: String,
    /// `None` when the class was never predicted.
    pub precision: Option<f64>,
    /// `None` when the class never occurs in the truth.
    pub recall: Option<f64>,
    /// `None` when precision or recall is undefined.
    pub f1: Option<f64>,
    pub support: u64,
    pub predicted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Means over the classes where each metric is defined.
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_f1: Option<f64>,
}

pub const UNDEFINED_MARKER: &str = "undefined";

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED_MARKER.to_string(), |x| format!("{:.1}%", 100.0 * x))
}

fn fixed(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED_MARKER.to_string(), |x| format!("{x:.2}"))
}

impl MetricsReport {
    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|c| c.class_name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("accuracy {}\n", pct(Some(self.accuracy)));
        s.push_str("class\tprecision\trecall\tf1\tsupport\n");
        for c in &self.per_class {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                c.class_name,
                pct(c.precision),
                pct(c.recall),
                fixed(c.f1),
                c.support
            );
        }
        let _ = writeln!(
            s,
            "macro\t{}\t{}\t{}\t",
            pct(self.macro_precision),
            pct(self.macro_recall),
            fixed(self.macro_f1)
        );
        s
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let n = cm.class_names.len();
    let total = cm.total();
    let trace: u64 = (0..n).map(|i| cm.counts[i][i]).sum();
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|i| {
            let tp = cm.counts[i][i];
            let support: u64 = cm.counts[i].iter().sum();
            let predicted: u64 = cm.counts.iter().map(|r| r[i]).sum();
            let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
            let recall = (support > 0).then(|| tp as f64 / support as f64);
            let f1 = precision.zip(recall).map(|(p, r)| f1_score(p, r));
            ClassMetrics {
                class_name: cm.class_names[i].clone(),
                precision,
                recall,
                f1,
                support,
                predicted,
            }
        })
        .collect();
    MetricsReport {
        accuracy: if total == 0 { 0.0 } else { trace as f64 / total as f64 },
        macro_precision: mean_defined(per_class.iter().map(|c| c.precision)),
        macro_recall: mean_defined(per_class.iter().map(|c| c.recall)),
        macro_f1: mean_defined(per_class.iter().map(|c| c.f1)),
        per_class,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub variant: ModelVariant,
    pub k: usize,
    pub seed: u64,
    pub mean_accuracy: f64,
    /// Sample standard deviation of fold accuracies over sqrt(k).
    pub std_error: f64,
    pub folds: Vec<FoldRecord>,
    /// Summed over all test folds; UNKNOWN predictions get their own column.
    pub confusion: ConfusionMatrix,
}

impl CvReport {
    pub fn summary_line(&self) -> String {
        format!(
            "{} {}-fold accuracy {:.2}% ± {:.2}%",
            self.variant.name(),
            self.k,
            100.0 * self.mean_accuracy,
            100.0 * self.std_error
        )
    }

    /// Per-class recall over the pooled test folds, for bar plots.
    pub fn per_class_accuracy(&self) -> Vec<(String, Option<f64>)> {
        metrics(&self.confusion)
            .per_class
            .into_iter()
            .filter(|c| c.support > 0)
            .map(|c| (c.class_name, c.recall))
            .collect()
    }
}

/// Bar-plot table: one row per model, mean accuracy and standard error.
pub fn cv_bar_table(reports: &[CvReport]) -> String {
    let mut s = String::from("model\tmean_accuracy\tstd_error\tk\n");
    for r in reports {
        let _ = writeln!(s, "{}\t{:.6}\t{:.6}\t{}", r.variant.name(), r.mean_accuracy, r.std_error, r.k);
    }
    s
}

pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Trains one model per fold and scores it on the held-out fold. Fold `f`
/// trains with a seed drawn from stream `f`; the uncertainty variant is
/// scored with Monte Carlo inference, where UNKNOWN counts as wrong.
pub fn cross_validate(
    dataset: &LabeledDataset,
    variant: ModelVariant,
    arch: &Architecture,
    train_config: &TrainConfig,
    k: usize,
    seed: u64,
) -> Result<CvReport, EvalError> {
    let splits = kfold_split(dataset, k, seed)?;
    let mut folds = Vec::with_capacity(k);
    let mut pooled: Option<ConfusionMatrix> = None;
    let mut axis = dataset.class_names.clone();
    axis.push(crate::UNKNOWN_LABEL.to_string());
    for (fold, (train_idx, test_idx)) in splits.iter().enumerate() {
        let fold_seed = stream_rng(derive_seed(seed, CV_SALT), fold as u64).next_u64();
        let cfg = TrainConfig {
            seed: fold_seed,
            ..*train_config
        };
        let train_set = dataset.subset(train_idx);
        let test_set = dataset.subset(test_idx);
        let fold_err = |source| EvalError::Fold { fold, source };
        let model = train(&train_set, arch, variant, &cfg).map_err(fold_err)?;
        let mut truth = Vec::with_capacity(test_set.len());
        let mut predicted = Vec::with_capacity(test_set.len());
        for (i, (x, &y)) in test_set.vectors.iter().zip(&test_set.labels).enumerate() {
            let p = if variant.uncertainty_aware() {
                mc_predict_indexed(&model, x, &cfg, i as u64)
            } else {
                predict(&model, x)
            }
            .map_err(fold_err)?;
            truth.push(dataset.class_names[y].clone());
            predicted.push(model.label_name(p.label).to_string());
        }
        // Every label is on `axis`, so all folds share one matrix shape.
        let cm = confusion(&truth, &predicted, &axis)?;
        let report = metrics(&cm);
        folds.push(FoldRecord {
            fold,
            seed: fold_seed,
            train_size: train_set.len(),
            test_size: test_set.len(),
            accuracy: report.accuracy,
            epochs_run: model.history.len(),
            best_epoch: model.best_epoch,
        });
        match &mut pooled {
            None => pooled = Some(cm),
            Some(p) => p.merge(&cm)?,
        }
    }
    let accs: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
    let (mean_accuracy, std_error) = mean_and_std_error(&accs);
    Ok(CvReport {
        variant,
        k,
        seed,
        mean_accuracy,
        std_error,
        folds,
        confusion: pooled.expect("k >= 2 folds"),
    })
}
