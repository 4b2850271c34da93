//! Sample-level classification: per-point spectra through the mineral
//! classifier, then the predicted labels through the expert system.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{classify, KnowledgeBase, KnowledgeError, RockClassification};
use crate::neural::{mc_predict_indexed, predict, Model, NeuralError, Prediction, TrainConfig};
use crate::spectra::{parse_spectrum_file, preprocess, GridSpec, Spectrum, SpectrumError};
use crate::UNKNOWN_LABEL;

pub const DEFAULT_MIN_POINTS: usize = 10;
pub const RESULT_FORMAT: &str = "rockclass.rock-result";
pub const RESULT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("TooFewPoints ({have} < {need})")]
    TooFewPoints { have: usize, need: usize },
    #[error("grid mismatch: model was trained on {model:?}, pipeline uses {requested:?}")]
    GridMismatch { model: GridSpec, requested: GridSpec },
    #[error("{0}")]
    ModeMismatch(String),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("cannot read sample {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed rock result record: {0}")]
    Format(String),
}

/// One measurement point. Unreadable points become UNKNOWN labels.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementPoint {
    Spectrum(Spectrum),
    Unreadable { source: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeasurements {
    pub sample_id: String,
    pub points: Vec<MeasurementPoint>,
}

impl SampleMeasurements {
    pub fn from_spectra(sample_id: &str, spectra: Vec<Spectrum>) -> Self {
        Self {
            sample_id: sample_id.to_string(),
            points: spectra.into_iter().map(MeasurementPoint::Spectrum).collect(),
        }
    }

    /// Every regular file in `dir`, in file-name order, is one point. The
    /// directory name is the sample id.
    pub fn load_dir(dir: &Path) -> Result<Self, PipelineError> {
        let io = |e: std::io::Error| PipelineError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        let points = paths
            .iter()
            .map(|p| {
                let source = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
                let parsed = fs::read_to_string(p)
                    .map_err(|e| e.to_string())
                    .and_then(|text| parse_spectrum_file(&text).map_err(|e| e.to_string()))
                    .and_then(|(_, s)| {
                        if s.len() < 2 {
                            Err(SpectrumError::TooShort(s.len()).to_string())
                        } else {
                            Ok(s)
                        }
                    });
                match parsed {
                    Ok(s) => MeasurementPoint::Spectrum(s),
                    Err(reason) => MeasurementPoint::Unreadable { source, reason },
                }
            })
            .collect();
        let sample_id = dir.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Self { sample_id, points })
    }

    pub fn valid_points(&self) -> usize {
        self.points
            .iter()
            .filter(|p| matches!(p, MeasurementPoint::Spectrum(_)))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifyMode {
    Base,
    UncertaintyAware,
    OracleLabels,
}

impl ClassifyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Base => "base",
            Self::UncertaintyAware => "uncertainty-aware",
            Self::OracleLabels => "oracle-labels",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Minimum number of readable spectra per sample.
    pub min_points: usize,
    /// Supplies the seed, pass count and UNKNOWN threshold for MC inference.
    pub inference: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            min_points: DEFAULT_MIN_POINTS,
            inference: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RockResult {
    pub sample_id: String,
    pub mode: ClassifyMode,
    /// One entry per point in spectral modes (`None` for unreadable points);
    /// empty in oracle-labels mode.
    pub predictions: Vec<Option<Prediction>>,
    pub mineral_labels: Vec<String>,
    pub classification: RockClassification,
}

#[derive(Serialize, Deserialize)]
struct Record {
    format: String,
    version: u32,
    #[serde(flatten)]
    result: RockResult,
}

impl RockResult {
    /// Single-line JSON record carrying the format name and version.
    pub fn to_record(&self) -> String {
        serde_json::to_string(&Record {
            format: RESULT_FORMAT.to_string(),
            version: RESULT_FORMAT_VERSION,
            result: self.clone(),
        })
        .expect("rock result serialises")
    }

    pub fn from_record(line: &str) -> Result<Self, PipelineError> {
        let rec: Record = serde_json::from_str(line).map_err(|e| PipelineError::Format(e.to_string()))?;
        if rec.format != RESULT_FORMAT || rec.version != RESULT_FORMAT_VERSION {
            return Err(PipelineError::Format(format!(
                "expected {RESULT_FORMAT} v{RESULT_FORMAT_VERSION}, found {} v{}",
                rec.format, rec.version
            )));
        }
        Ok(rec.result)
    }
}

/// Classifies a sample from its spectra with the base or uncertainty-aware
/// model path.
pub fn classify_sample(
    sample: &SampleMeasurements,
    model: &Model,
    kb: &KnowledgeBase,
    mode: ClassifyMode,
    grid: &GridSpec,
    config: &PipelineConfig,
) -> Result<RockResult, PipelineError> {
    if mode == ClassifyMode::OracleLabels {
        return Err(PipelineError::ModeMismatch("oracle-labels mode takes label lists, not spectra".into()));
    }
    if *grid != model.grid {
        return Err(PipelineError::GridMismatch {
            model: model.grid,
            requested: *grid,
        });
    }
    let have = sample.valid_points();
    if have < config.min_points {
        return Err(PipelineError::TooFewPoints {
            have,
            need: config.min_points,
        });
    }
    let mut predictions = Vec::with_capacity(sample.points.len());
    let mut labels = Vec::with_capacity(sample.points.len());
    for (i, point) in sample.points.iter().enumerate() {
        match point {
            MeasurementPoint::Spectrum(s) => {
                let x = preprocess(s, grid);
                let p = match mode {
                    ClassifyMode::UncertaintyAware => mc_predict_indexed(model, &x, &config.inference, i as u64)?,
                    _ => predict(model, &x)?,
                };
                labels.push(model.label_name(p.label).to_string());
                predictions.push(Some(p));
            }
            MeasurementPoint::Unreadable { .. } => {
                labels.push(UNKNOWN_LABEL.to_string());
                predictions.push(None);
            }
        }
    }
    let classification = classify(&labels, kb)?;
    Ok(RockResult {
        sample_id: sample.sample_id.clone(),
        mode,
        predictions,
        mineral_labels: labels,
        classification,
    })
}

/// Expert-system-only path over known mineral labels.
pub fn classify_labels<S: AsRef<str>>(
    sample_id: &str,
    labels: &[S],
    kb: &KnowledgeBase,
) -> Result<RockResult, PipelineError> {
    let classification = classify(labels, kb)?;
    Ok(RockResult {
        sample_id: sample_id.to_string(),
        mode: ClassifyMode::OracleLabels,
        predictions: Vec::new(),
        mineral_labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
        classification,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleInput {
    Spectra(SampleMeasurements),
    Labels { sample_id: String, labels: Vec<String> },
}

impl SampleInput {
    pub fn sample_id(&self) -> &str {
        match self {
            Self::Spectra(s) => &s.sample_id,
            Self::Labels { sample_id, .. } => sample_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub sample_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchOutcome {
    pub results: Vec<RockResult>,
    pub failures: Vec<SampleFailure>,
}

impl BatchOutcome {
    /// (sample id, predicted rock label) pairs for confusion bookkeeping.
    pub fn predicted_labels(&self) -> Vec<(String, String)> {
        self.results
            .iter()
            .map(|r| (r.sample_id.clone(), r.classification.label.to_string()))
            .collect()
    }
}

/// Classifies every input; a failing sample is recorded and skipped.
/// Spectral inputs need `model`; label inputs always use the oracle-labels path.
pub fn classify_batch(
    inputs: &[SampleInput],
    model: Option<&Model>,
    kb: &KnowledgeBase,
    mode: ClassifyMode,
    grid: &GridSpec,
    config: &PipelineConfig,
) -> BatchOutcome {
    let mut out = BatchOutcome::default();
    for input in inputs {
        let result = match input {
            SampleInput::Labels { sample_id, labels } => classify_labels(sample_id, labels, kb),
            SampleInput::Spectra(sample) => match model {
                Some(m) => classify_sample(sample, m, kb, mode, grid, config),
                None => Err(PipelineError::ModeMismatch(format!("{} mode needs a trained model", mode.as_str()))),
            },
        };
        match result {
            Ok(r) => out.results.push(r),
            Err(e) => out.failures.push(SampleFailure {
                sample_id: input.sample_id().to_string(),
                error: e.to_string(),
            }),
        }
    }
    out
}
