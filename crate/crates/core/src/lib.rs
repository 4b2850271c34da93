//! Mineral identification from Raman spectra and rock-type deduction from
//! the resulting mineral assemblages.
//!
//! The crate is organised along the processing chain:
//!
//! - [`spectra`] parses spectrum files and maps them onto a common grid.
//! - [`synthgen`] expands small per-mineral sets and builds synthetic corpora.
//! - [`neural`] holds the 1D-CNN and MLP classifiers, trained from scratch,
//!   with Monte Carlo dropout inference.
//! - [`knowledge`] is the weighted, dual-threshold expert system.
//! - [`pipeline`] chains per-point predictions into a rock classification.
//! - [`eval`] provides cross-validation, confusion metrics and the golden suite.

pub mod eval;
pub mod knowledge;
pub mod neural;
pub mod pipeline;
pub mod provenance;
pub mod rng;
pub mod spectra;
pub mod synthgen;

pub use knowledge::{classify, default_knowledge_base, KnowledgeBase, RockClassification, RockLabel};
pub use spectra::{GridSpec, LabeledDataset, Spectrum, SpectrumMetadata};

/// Label used for measurement points the mineral classifier refuses to name.
pub const UNKNOWN_LABEL: &str = "UNKNOWN";
