//! Synthetic spectra: per-class dataset expansion and a Gaussian-peak corpus.
//!
//! Classes with enough samples are expanded by perturbing their principal
//! component coefficients; small classes are expanded by direct variation of
//! individual spectra (shift, scale, noise). Each class draws from its own
//! seeded stream, keyed by class index.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_seed, stream_rng};
use crate::spectra::{normalize, GridSpec, LabeledDataset};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("class has {have} samples, PCA expansion needs at least {need}")]
    TooFewSamples { have: usize, need: usize },
    #[error("peak at {center} cm-1 of {mineral} lies outside the grid")]
    PeakOutOfRange { mineral: String, center: f64 },
    #[error("invalid peak for {mineral}: width and height must be positive")]
    InvalidPeak { mineral: String },
    #[error("duplicate mineral name {0:?}")]
    DuplicateName(String),
    #[error("no mineral specs given")]
    NoSpecs,
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("class vectors contain non-finite values")]
    NonFinite,
    #[error("cannot read mineral spec file: {0}")]
    Io(String),
    #[error("cannot parse mineral spec file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Final size of each class as a multiple of its original size.
    pub target_multiplier: f64,
    /// Classes with at least this many samples take the PCA path.
    pub pca_min_samples: usize,
    /// Upper bound on retained components; the effective count is
    /// `min(pca_components, samples - 1)`.
    pub pca_components: usize,
    pub coeff_sigma_scale: f64,
    pub noise_sigma: f64,
    /// Largest shift, in grid points, applied by direct variation.
    pub shift_max: usize,
    pub scale_range: [f64; 2],
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            target_multiplier: 4.0,
            pca_min_samples: 8,
            pca_components: 5,
            coeff_sigma_scale: 0.5,
            noise_sigma: 0.01,
            shift_max: 3,
            scale_range: [0.9, 1.1],
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if !(self.target_multiplier.is_finite() && self.target_multiplier >= 1.0) {
            return bad("target_multiplier must be >= 1");
        }
        let [lo, hi] = self.scale_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("scale_range must satisfy 0 < lo <= hi");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be >= 0");
        }
        if !(self.coeff_sigma_scale >= 0.0 && self.coeff_sigma_scale.is_finite()) {
            return bad("coeff_sigma_scale must be >= 0");
        }
        Ok(())
    }

    /// Number of synthetic rows to add to a class of `original` samples:
    /// `ceil((multiplier - 1) * original)`.
    pub fn synthetic_count(&self, original: usize) -> usize {
        let exact = (self.target_multiplier - 1.0) * original as f64;
        // 0.1 * 10 is 1.0000000000000002 in f64; do not let that round up.
        let nearest = exact.round();
        if (exact - nearest).abs() < 1e-9 {
            nearest as usize
        } else {
            exact.ceil() as usize
        }
    }
}

fn gaussian(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma checked positive"))
}

/// Principal-component expansion of one class using the configured seed (stream 0).
pub fn pca_augment(class_vectors: &[Vec<f64>], config: &AugmentConfig) -> Result<Vec<Vec<f64>>, SynthError> {
    let mut rng = stream_rng(config.seed, 0);
    pca_augment_with(class_vectors, config, &mut rng)
}

pub fn pca_augment_with<R: Rng>(
    class_vectors: &[Vec<f64>],
    config: &AugmentConfig,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, SynthError> {
    config.validate()?;
    let n = class_vectors.len();
    if n < config.pca_min_samples.max(1) {
        return Err(SynthError::TooFewSamples {
            have: n,
            need: config.pca_min_samples.max(1),
        });
    }
    if class_vectors.iter().flatten().any(|v| !v.is_finite()) {
        return Err(SynthError::NonFinite);
    }
    let dim = class_vectors[0].len();
    let mut mean = vec![0.0; dim];
    for row in class_vectors {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    // With n << dim, diagonalise the n x n Gram matrix of the centred rows and
    // lift its eigenvectors back to unit principal axes in feature space.
    let centred = DMatrix::from_fn(n, dim, |i, j| class_vectors[i][j] - mean[j]);
    let gram = &centred * centred.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let keep = config.pca_components.min(n.saturating_sub(1));
    let scale_ref = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut axes: Vec<Vec<f64>> = Vec::new();
    let mut scores: Vec<Vec<f64>> = Vec::new(); // scores[k][i]
    let mut stds: Vec<f64> = Vec::new();
    for &k in order.iter().take(keep) {
        let lambda = eig.eigenvalues[k];
        if lambda <= 1e-12 * scale_ref.max(1e-300) || lambda <= 0.0 {
            continue;
        }
        let u = eig.eigenvectors.column(k);
        let root = lambda.sqrt();
        let axis = centred.transpose() * u / root;
        axes.push(axis.iter().copied().collect());
        scores.push(u.iter().map(|x| x * root).collect());
        stds.push((lambda / (n.max(2) - 1) as f64).sqrt());
    }

    let count = config.synthetic_count(n);
    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let base = s % n;
        let mut row = mean.clone();
        for (k, axis) in axes.iter().enumerate() {
            let mut coeff = scores[k][base];
            if let Some(noise) = gaussian(config.coeff_sigma_scale * stds[k]) {
                coeff += noise.sample(rng);
            }
            for (r, a) in row.iter_mut().zip(axis) {
                *r += coeff * a;
            }
        }
        row.iter_mut().for_each(|v| *v = v.max(0.0));
        out.push(row);
    }
    Ok(out)
}

/// One randomly perturbed copy of `vector`: integer shift with zero fill,
/// multiplicative scale, additive Gaussian noise, then clamp at zero.
pub fn direct_variation<R: Rng>(vector: &[f64], config: &AugmentConfig, rng: &mut R) -> Vec<f64> {
    let len = vector.len();
    let max = config.shift_max as i64;
    let shift = if max > 0 { rng.random_range(-max..=max) } else { 0 };
    let [lo, hi] = config.scale_range;
    let scale = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let noise = gaussian(config.noise_sigma);

    (0..len as i64)
        .map(|i| {
            let src = i - shift;
            let base = if (0..len as i64).contains(&src) {
                vector[src as usize]
            } else {
                0.0
            };
            let mut v = base * scale;
            if let Some(n) = &noise {
                v += n.sample(rng);
            }
            v.max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugmentPath {
    Pca,
    Direct,
    /// Nothing generated (multiplier 1, empty class, or a failure).
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassManifest {
    pub class_name: String,
    pub original: usize,
    pub synthetic: usize,
    pub path: AugmentPath,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentManifest {
    pub seed: u64,
    pub target_multiplier: f64,
    pub classes: Vec<ClassManifest>,
}

impl AugmentManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "target_multiplier: {}", self.target_multiplier);
        let _ = writeln!(out, "{:<16} {:>8} {:>9} {:>7}", "class", "original", "synthetic", "path");
        for c in &self.classes {
            let path = match c.path {
                AugmentPath::Pca => "pca",
                AugmentPath::Direct => "direct",
                AugmentPath::None => "none",
            };
            let _ = write!(out, "{:<16} {:>8} {:>9} {:>7}", c.class_name, c.original, c.synthetic, path);
            if let Some(e) = &c.error {
                let _ = write!(out, "  error: {e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Expands every class of `dataset` towards `target_multiplier` times its size.
///
/// Original rows are kept unchanged and in order; synthetic rows follow,
/// grouped by class.
pub fn expand_dataset(
    dataset: &LabeledDataset,
    config: &AugmentConfig,
) -> Result<(LabeledDataset, AugmentManifest), SynthError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(SynthError::EmptyDataset);
    }
    let mut out = dataset.clone();
    let mut manifest = AugmentManifest {
        seed: config.seed,
        target_multiplier: config.target_multiplier,
        classes: Vec::new(),
    };

    for (class, indices) in dataset.indices_by_class().into_iter().enumerate() {
        let rows: Vec<Vec<f64>> = indices.iter().map(|&i| dataset.vectors[i].clone()).collect();
        let wanted = config.synthetic_count(rows.len());
        let mut entry = ClassManifest {
            class_name: dataset.class_names[class].clone(),
            original: rows.len(),
            synthetic: 0,
            path: AugmentPath::None,
            error: None,
        };
        if wanted > 0 {
            let mut rng = stream_rng(config.seed, class as u64);
            let generated = if rows.len() >= config.pca_min_samples {
                entry.path = AugmentPath::Pca;
                pca_augment_with(&rows, config, &mut rng)
            } else {
                entry.path = AugmentPath::Direct;
                Ok((0..wanted)
                    .map(|s| direct_variation(&rows[s % rows.len()], config, &mut rng))
                    .collect())
            };
            match generated {
                Ok(new_rows) => {
                    entry.synthetic = new_rows.len();
                    out.labels.extend(std::iter::repeat_n(class, new_rows.len()));
                    out.vectors.extend(new_rows);
                }
                Err(e) => {
                    entry.path = AugmentPath::None;
                    entry.error = Some(e.to_string());
                }
            }
        }
        manifest.classes.push(entry);
    }
    Ok((out, manifest))
}

/// Gaussian band: centre and standard deviation in cm⁻¹, relative height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMineralSpec {
    pub name: String,
    pub peaks: Vec<Peak>,
}

impl SyntheticMineralSpec {
    pub fn new(name: &str, peaks: &[(f64, f64, f64)]) -> Self {
        Self {
            name: name.to_string(),
            peaks: peaks
                .iter()
                .map(|&(center, width, height)| Peak { center, width, height })
                .collect(),
        }
    }

    /// Noise-free band profile on `grid` (not normalized).
    pub fn profile(&self, grid: &GridSpec) -> Vec<f64> {
        (0..grid.num_points)
            .map(|i| {
                let x = grid.point(i);
                self.peaks
                    .iter()
                    .map(|p| {
                        let z = (x - p.center) / p.width;
                        p.height * (-0.5 * z * z).exp()
                    })
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct SpecFile {
    mineral: Vec<SpecFileEntry>,
}

#[derive(Debug, Deserialize)]
struct SpecFileEntry {
    name: String,
    /// `[center, width, height]` triples.
    peaks: Vec<[f64; 3]>,
}

/// Parses mineral specs from TOML:
///
/// ```toml
/// [[mineral]]
/// name = "Quartz"
/// peaks = [[464.0, 6.0, 1.0], [206.0, 8.0, 0.35]]
/// ```
pub fn parse_mineral_specs(text: &str) -> Result<Vec<SyntheticMineralSpec>, SynthError> {
    let file: SpecFile = toml::from_str(text).map_err(|e| SynthError::Parse(e.to_string()))?;
    Ok(file
        .mineral
        .into_iter()
        .map(|m| SyntheticMineralSpec {
            name: m.name,
            peaks: m
                .peaks
                .into_iter()
                .map(|[center, width, height]| Peak { center, width, height })
                .collect(),
        })
        .collect())
}

pub fn load_mineral_specs(path: &Path) -> Result<Vec<SyntheticMineralSpec>, SynthError> {
    let text = std::fs::read_to_string(path).map_err(|e| SynthError::Io(format!("{}: {e}", path.display())))?;
    parse_mineral_specs(&text)
}

/// Noise level of the shipped corpus, relative to a unit-height main band.
pub const DEFAULT_CORPUS_NOISE: f64 = 0.02;

/// Fourteen mineral classes with approximate main Raman bands (centre, sigma,
/// relative height). Twelve are the rock-forming and accessory species of the
/// granite, sandstone and limestone trees; apatite and zircon stand in for the
/// remaining minor minerals.
pub fn default_mineral_specs() -> Vec<SyntheticMineralSpec> {
    use SyntheticMineralSpec as S;
    vec![
        S::new("Quartz", &[(464.0, 6.0, 1.0), (206.0, 8.0, 0.35), (355.0, 6.0, 0.2), (808.0, 8.0, 0.08)]),
        S::new("Albite", &[(507.0, 6.0, 1.0), (479.0, 6.0, 0.6), (290.0, 8.0, 0.3), (1098.0, 10.0, 0.1)]),
        S::new("Anorthite", &[(503.0, 7.0, 1.0), (485.0, 7.0, 0.55), (560.0, 8.0, 0.25), (280.0, 8.0, 0.3)]),
        S::new("Orthoclase", &[(513.0, 6.0, 1.0), (475.0, 6.0, 0.5), (285.0, 8.0, 0.35), (455.0, 6.0, 0.3)]),
        S::new("Annite", &[(190.0, 10.0, 0.7), (555.0, 10.0, 0.5), (680.0, 10.0, 1.0)]),
        S::new("Muscovite", &[(263.0, 8.0, 0.8), (702.0, 8.0, 1.0), (410.0, 8.0, 0.4), (1100.0, 10.0, 0.2)]),
        S::new("Phlogopite", &[(195.0, 8.0, 0.9), (683.0, 10.0, 1.0), (1045.0, 10.0, 0.4), (325.0, 8.0, 0.3)]),
        S::new("Calcite", &[(1086.0, 4.0, 1.0), (712.0, 4.0, 0.3), (281.0, 6.0, 0.4), (156.0, 5.0, 0.3)]),
        S::new("Dolomite", &[(1097.0, 4.0, 1.0), (725.0, 4.0, 0.3), (300.0, 6.0, 0.45), (176.0, 5.0, 0.35)]),
        S::new("Pyrite", &[(343.0, 5.0, 1.0), (379.0, 5.0, 0.8), (430.0, 6.0, 0.15)]),
        S::new("Rutile", &[(447.0, 10.0, 1.0), (612.0, 10.0, 0.9), (240.0, 12.0, 0.5)]),
        S::new("Tourmaline", &[(220.0, 8.0, 0.5), (372.0, 8.0, 0.6), (710.0, 8.0, 1.0), (1060.0, 10.0, 0.4)]),
        S::new("Apatite", &[(965.0, 4.0, 1.0), (430.0, 6.0, 0.3), (590.0, 6.0, 0.25), (1048.0, 6.0, 0.2)]),
        S::new("Zircon", &[(1008.0, 5.0, 1.0), (357.0, 6.0, 0.7), (439.0, 6.0, 0.4), (975.0, 5.0, 0.3)]),
    ]
}

fn validate_specs(specs: &[SyntheticMineralSpec], grid: &GridSpec) -> Result<(), SynthError> {
    if specs.is_empty() {
        return Err(SynthError::NoSpecs);
    }
    let mut names = HashSet::new();
    for spec in specs {
        if !names.insert(spec.name.to_lowercase()) {
            return Err(SynthError::DuplicateName(spec.name.clone()));
        }
        for p in &spec.peaks {
            if !grid.contains(p.center) {
                return Err(SynthError::PeakOutOfRange {
                    mineral: spec.name.clone(),
                    center: p.center,
                });
            }
            if !(p.width > 0.0 && p.height > 0.0) {
                return Err(SynthError::InvalidPeak {
                    mineral: spec.name.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Generates `per_class` noisy, min-max normalized samples for every spec.
///
/// Rows are class-major in spec order; class `c` draws from stream `c`.
pub fn make_synthetic_corpus(
    specs: &[SyntheticMineralSpec],
    per_class: usize,
    grid: &GridSpec,
    noise_sigma: f64,
    seed: u64,
) -> Result<LabeledDataset, SynthError> {
    validate_specs(specs, grid)?;
    grid.validate().map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(SynthError::InvalidConfig("noise_sigma must be >= 0".into()));
    }
    let noise = gaussian(noise_sigma);
    let corpus_seed = derive_seed(seed, 0xC0_4905);
    let mut vectors = Vec::with_capacity(specs.len() * per_class);
    let mut labels = Vec::with_capacity(specs.len() * per_class);
    for (class, spec) in specs.iter().enumerate() {
        let clean = spec.profile(grid);
        let mut rng = stream_rng(corpus_seed, class as u64);
        for _ in 0..per_class {
            let noisy: Vec<f64> = match &noise {
                Some(n) => clean.iter().map(|v| v + n.sample(&mut rng)).collect(),
                None => clean.clone(),
            };
            vectors.push(normalize(&noisy));
            labels.push(class);
        }
    }
    let names = specs.iter().map(|s| s.name.clone()).collect();
    LabeledDataset::new(vectors, labels, names, *grid).map_err(|e| SynthError::InvalidConfig(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    #[test]
    fn pca_on_identical_rows_reproduces_the_row() {
        let row: Vec<f64> = (0..32).map(|i| (i as f64 * 0.3).sin().abs()).collect();
        let cfg = AugmentConfig {
            pca_min_samples: 2,
            ..AugmentConfig::default()
        };
        let out = pca_augment(&[row.clone(), row.clone()], &cfg).unwrap();
        assert_eq!(out.len(), 6);
        for r in out {
            for (a, b) in r.iter().zip(&row) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pca_count_and_determinism() {
        let corpus = make_synthetic_corpus(&default_mineral_specs()[..1], 10, &grid(), 0.05, 3).unwrap();
        let cfg = AugmentConfig::default();
        let a = pca_augment(&corpus.vectors, &cfg).unwrap();
        let b = pca_augment(&corpus.vectors, &cfg).unwrap();
        assert_eq!(a.len(), 30);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|v| *v >= 0.0));
    }

    #[test]
    fn pca_rejects_small_classes() {
        let cfg = AugmentConfig::default();
        let rows = vec![vec![0.0; 4]; 3];
        assert_eq!(
            pca_augment(&rows, &cfg).unwrap_err(),
            SynthError::TooFewSamples { have: 3, need: 8 }
        );
    }

    #[test]
    fn direct_variation_identity_and_scaling() {
        let mut rng = stream_rng(1, 0);
        let identity = AugmentConfig {
            noise_sigma: 0.0,
            shift_max: 0,
            scale_range: [1.0, 1.0],
            ..AugmentConfig::default()
        };
        let v = vec![0.2, 0.9, 0.4];
        assert_eq!(direct_variation(&v, &identity, &mut rng), v);
        let double = AugmentConfig {
            scale_range: [2.0, 2.0],
            ..identity
        };
        assert_eq!(direct_variation(&[0.0, 1.0, 2.0], &double, &mut rng), vec![0.0, 2.0, 4.0]);
    }

    #[test]
    fn direct_variation_is_seeded() {
        let cfg = AugmentConfig::default();
        let v: Vec<f64> = (0..50).map(|i| (i as f64 / 7.0).cos().abs()).collect();
        let a = direct_variation(&v, &cfg, &mut stream_rng(9, 2));
        let b = direct_variation(&v, &cfg, &mut stream_rng(9, 2));
        assert_eq!(a, b);
        assert!(a.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn direct_variation_shift_zero_fills() {
        let cfg = AugmentConfig {
            noise_sigma: 0.0,
            shift_max: 2,
            scale_range: [1.0, 1.0],
            ..AugmentConfig::default()
        };
        let v = vec![1.0; 10];
        for seed in 0..20 {
            let out = direct_variation(&v, &cfg, &mut stream_rng(seed, 0));
            let zeros = out.iter().filter(|x| **x == 0.0).count();
            assert!(zeros <= 2);
            assert_eq!(out.iter().filter(|x| **x == 1.0).count(), 10 - zeros);
        }
    }

    #[test]
    fn expand_routes_by_class_size() {
        let specs = default_mineral_specs();
        let a = make_synthetic_corpus(&specs[..1], 3, &grid(), 0.05, 1).unwrap();
        let b = make_synthetic_corpus(&specs[1..2], 12, &grid(), 0.05, 1).unwrap();
        let mut ds = a.clone();
        ds.class_names.push(b.class_names[0].clone());
        ds.vectors.extend(b.vectors);
        ds.labels.extend(std::iter::repeat_n(1, 12));
        let (out, manifest) = expand_dataset(&ds, &AugmentConfig::default()).unwrap();
        assert_eq!(manifest.classes[0].path, AugmentPath::Direct);
        assert_eq!(manifest.classes[1].path, AugmentPath::Pca);
        assert_eq!(out.class_counts(), vec![12, 48]);
        assert_eq!(&out.vectors[..15], &ds.vectors[..]);
        assert!(manifest.to_text().contains("direct"));
    }

    #[test]
    fn expand_small_class_by_four() {
        let ds = make_synthetic_corpus(&default_mineral_specs()[..1], 5, &grid(), 0.05, 1).unwrap();
        let (out, manifest) = expand_dataset(&ds, &AugmentConfig::default()).unwrap();
        assert_eq!(out.len(), 20);
        assert_eq!(manifest.classes[0].path, AugmentPath::Direct);
    }

    #[test]
    fn multiplier_one_is_a_no_op() {
        let ds = make_synthetic_corpus(&default_mineral_specs()[..2], 4, &grid(), 0.05, 1).unwrap();
        let cfg = AugmentConfig {
            target_multiplier: 1.0,
            ..AugmentConfig::default()
        };
        let (out, _) = expand_dataset(&ds, &cfg).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn synthetic_count_is_exact_ceiling() {
        let cfg = |m| AugmentConfig {
            target_multiplier: m,
            ..AugmentConfig::default()
        };
        assert_eq!(cfg(4.0).synthetic_count(10), 30);
        assert_eq!(cfg(1.1).synthetic_count(10), 1);
        assert_eq!(cfg(1.25).synthetic_count(3), 1);
        assert_eq!(cfg(2.5).synthetic_count(3), 5);
    }

    #[test]
    fn single_peak_corpus_peaks_at_center() {
        let spec = SyntheticMineralSpec::new("Solo", &[(800.0, 10.0, 1.0)]);
        let g = grid();
        let ds = make_synthetic_corpus(&[spec], 4, &g, 0.0, 0).unwrap();
        let expected = g.nearest_index(800.0);
        for row in &ds.vectors {
            assert_eq!(row, &ds.vectors[0]);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, expected);
        }
    }

    #[test]
    fn corpus_counts_and_errors() {
        let ds = make_synthetic_corpus(&default_mineral_specs(), 50, &grid(), DEFAULT_CORPUS_NOISE, 0).unwrap();
        assert_eq!(ds.len(), 700);
        assert_eq!(ds.num_classes(), 14);
        let bad = SyntheticMineralSpec::new("Far", &[(5000.0, 5.0, 1.0)]);
        assert!(matches!(
            make_synthetic_corpus(&[bad], 1, &grid(), 0.0, 0),
            Err(SynthError::PeakOutOfRange { .. })
        ));
        let dup = vec![default_mineral_specs()[0].clone(), default_mineral_specs()[0].clone()];
        assert!(matches!(
            make_synthetic_corpus(&dup, 1, &grid(), 0.0, 0),
            Err(SynthError::DuplicateName(_))
        ));
    }

    #[test]
    fn spec_file_parses() {
        let specs = parse_mineral_specs(
            "[[mineral]]\nname = \"Quartz\"\npeaks = [[464.0, 6.0, 1.0], [206.0, 8.0, 0.35]]\n",
        )
        .unwrap();
        assert_eq!(specs[0].name, "Quartz");
        assert_eq!(specs[0].peaks[1].center, 206.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn expansion_counts_and_originals(counts in proptest::collection::vec(1usize..14, 1..4),
                                          mult in 1.0f64..4.0, seed in 0u64..1000) {
            let specs = default_mineral_specs();
            let g = GridSpec::new(150.0, 1500.0, 96).unwrap();
            let mut ds = LabeledDataset::new(vec![], vec![], vec![], g).unwrap();
            for (c, &n) in counts.iter().enumerate() {
                let part = make_synthetic_corpus(&specs[c..c + 1], n, &g, 0.05, seed).unwrap();
                ds.class_names.push(part.class_names[0].clone());
                ds.vectors.extend(part.vectors);
                ds.labels.extend(std::iter::repeat_n(c, n));
            }
            let cfg = AugmentConfig { target_multiplier: mult, seed, ..AugmentConfig::default() };
            let (out, _) = expand_dataset(&ds, &cfg).unwrap();
            prop_assert_eq!(&out.vectors[..ds.len()], &ds.vectors[..]);
            for (c, &n) in counts.iter().enumerate() {
                let expected = n + cfg.synthetic_count(n);
                prop_assert_eq!(out.class_counts()[c], expected);
                prop_assert!(expected as f64 >= mult * n as f64 - 1e-9);
            }
            prop_assert!(out.vectors.iter().flatten().all(|v| *v >= 0.0));
            let (again, _) = expand_dataset(&ds, &cfg).unwrap();
            prop_assert_eq!(out, again);
        }
    }
}
