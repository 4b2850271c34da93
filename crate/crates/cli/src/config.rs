//! Run configuration shared by every subcommand.
//!
//! Values come from three layers, later ones winning: built-in defaults, the
//! TOML file given with `--config`, then command-line flags. The top-level
//! `seed` is copied into `train.seed` and `augment.seed`, so one number fixes
//! every random stream of a run. See `rockclass.example.toml` for the full
//! annotated format.

use std::path::{Path, PathBuf};

use rockclass::knowledge::{default_knowledge_base, load_knowledge_base, KnowledgeBase};
use rockclass::neural::{CnnConfig, MlpConfig, TrainConfig};
use rockclass::pipeline::{PipelineConfig, DEFAULT_MIN_POINTS};
use rockclass::provenance::Provenance;
use rockclass::spectra::GridSpec;
use rockclass::synthgen::{default_mineral_specs, AugmentConfig, DEFAULT_CORPUS_NOISE};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub per_class: usize,
    pub noise_sigma: f64,
    /// TOML file of `[[mineral]]` peak tables; the built-in 14 minerals when unset.
    pub specs_path: Option<PathBuf>,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            per_class: 50,
            noise_sigma: DEFAULT_CORPUS_NOISE,
            specs_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub min_points: usize,
    pub kb_path: Option<PathBuf>,
    pub class_names: Vec<String>,
    pub grid: GridSpec,
    pub augment: AugmentConfig,
    /// `input_length` and `num_classes` are taken from the dataset at training time.
    pub cnn: CnnConfig,
    pub mlp: MlpConfig,
    pub train: TrainConfig,
    pub synth: SynthSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            min_points: DEFAULT_MIN_POINTS,
            kb_path: None,
            class_names: default_mineral_specs().into_iter().map(|s| s.name).collect(),
            grid: GridSpec::default(),
            augment: AugmentConfig::default(),
            cnn: CnnConfig::default(),
            mlp: MlpConfig::default(),
            train: TrainConfig::default(),
            synth: SynthSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Propagates the master seed and checks every embedded config.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        self.train.seed = self.seed;
        self.augment.seed = self.seed;
        let bad = |what: &str, e: String| CliError::Usage(format!("invalid {what} config: {e}"));
        self.grid.validate().map_err(|e| bad("grid", e.to_string()))?;
        self.augment.validate().map_err(|e| bad("augment", e.to_string()))?;
        self.train.validate().map_err(|e| bad("train", e.to_string()))?;
        if self.min_points == 0 {
            return Err(bad("run", "min_points must be >= 1".into()));
        }
        if self.class_names.len() < 2 {
            return Err(bad("run", "class_names needs at least 2 entries".into()));
        }
        Ok(self)
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::new(self, self.seed)
    }

    pub fn knowledge_base(&self) -> Result<KnowledgeBase, CliError> {
        match &self.kb_path {
            Some(p) => load_knowledge_base(p).map_err(|e| CliError::Data(e.to_string())),
            None => Ok(default_knowledge_base()),
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            min_points: self.min_points,
            inference: self.train,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_file_matches_defaults() {
        let text = include_str!("../rockclass.example.toml");
        assert_eq!(RunConfig::parse(text).unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg = RunConfig::parse("seed = 9\n[train]\nmax_epochs = 3\n").unwrap().resolve().unwrap();
        assert_eq!(cfg.train.max_epochs, 3);
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.augment.seed, 9);
        assert_eq!(cfg.train.patience, 20);
        assert_eq!(cfg.class_names.len(), 14);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("sede = 1\n").unwrap_err().contains("sede"));
        assert!(RunConfig::parse("[train]\nlr = 0.1\n").is_err());
    }

    #[test]
    fn hash_follows_the_resolved_config() {
        let a = RunConfig::default().resolve().unwrap();
        let b = RunConfig { seed: 1, ..RunConfig::default() }.resolve().unwrap();
        assert_eq!(a.provenance(), RunConfig::default().resolve().unwrap().provenance());
        assert_ne!(a.provenance().config_hash, b.provenance().config_hash);
    }
}
