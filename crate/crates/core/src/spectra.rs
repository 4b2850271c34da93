//! RRUFF-style spectrum files and their conversion to fixed-grid vectors.
//!
//! A spectrum file is plain UTF-8 text. Header lines have the form
//! `##KEY=VALUE`; every other non-blank line is a `wavenumber, intensity`
//! pair (a comma, whitespace, or both may separate the two numbers):
//!
//! ```text
//! ##NAMES=Quartz
//! ##RRUFFID=R040031
//! 150.2, 12.5
//! 151.5, 13.0
//! ##END=
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provenance::Provenance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("malformed data line {line}: {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("non-finite value on line {line}")]
    NonFiniteValue { line: usize },
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("file contains no data lines")]
    EmptySpectrum,
    #[error("spectrum needs at least 2 distinct wavenumbers, got {0}")]
    TooShort(usize),
    #[error("wavenumbers and intensities differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("wavenumbers must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read directory {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no spectra found in {0}")]
    EmptyDataset(PathBuf),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("row {row} has length {len}, expected {expected}")]
    RowLength {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("duplicate class name {0:?}")]
    DuplicateClass(String),
    #[error("{0} vectors but {1} labels")]
    CountMismatch(usize, usize),
}

/// Raman spectrum: intensity against Raman shift in cm⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    wavenumbers: Vec<f64>,
    intensities: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavenumbers: Vec<f64>, intensities: Vec<f64>) -> Result<Self, SpectrumError> {
        if wavenumbers.len() != intensities.len() {
            return Err(SpectrumError::LengthMismatch(
                wavenumbers.len(),
                intensities.len(),
            ));
        }
        if wavenumbers.len() < 2 {
            return Err(SpectrumError::TooShort(wavenumbers.len()));
        }
        if let Some(i) = wavenumbers
            .iter()
            .chain(&intensities)
            .position(|v| !v.is_finite())
        {
            return Err(SpectrumError::NonFiniteSample(i % wavenumbers.len()));
        }
        if let Some(i) = wavenumbers.windows(2).position(|w| w[1] <= w[0]) {
            return Err(SpectrumError::NotIncreasing(i + 1));
        }
        Ok(Self {
            wavenumbers,
            intensities,
        })
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn len(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavenumbers.is_empty()
    }

    /// Builds a spectrum sampled exactly on `grid`.
    pub fn on_grid(grid: &GridSpec, intensities: Vec<f64>) -> Result<Self, SpectrumError> {
        Self::new(grid.points(), intensities)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub mineral_name: String,
    pub source_id: String,
    /// Remaining header fields, keyed by their upper-case header key.
    pub extra: BTreeMap<String, String>,
}

/// Uniform wavenumber grid onto which every spectrum is resampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min_wavenumber: f64,
    pub max_wavenumber: f64,
    pub num_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min_wavenumber: 150.0,
            max_wavenumber: 1500.0,
            num_points: 1024,
        }
    }
}

impl GridSpec {
    pub fn new(min_wavenumber: f64, max_wavenumber: f64, num_points: usize) -> Result<Self, SpectrumError> {
        let grid = Self {
            min_wavenumber,
            max_wavenumber,
            num_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        if !(self.min_wavenumber.is_finite() && self.max_wavenumber.is_finite()) {
            return Err(SpectrumError::InvalidGrid("bounds must be finite".into()));
        }
        if self.min_wavenumber >= self.max_wavenumber {
            return Err(SpectrumError::InvalidGrid(format!(
                "min {} must be below max {}",
                self.min_wavenumber, self.max_wavenumber
            )));
        }
        if self.num_points < 2 {
            return Err(SpectrumError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                self.num_points
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max_wavenumber - self.min_wavenumber) / (self.num_points - 1) as f64
    }

    /// Wavenumber of grid point `i`. The last point is pinned to `max_wavenumber`.
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.num_points {
            self.max_wavenumber
        } else {
            self.min_wavenumber + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.num_points).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point closest to `wavenumber`, clamped to the grid.
    pub fn nearest_index(&self, wavenumber: f64) -> usize {
        let raw = ((wavenumber - self.min_wavenumber) / self.step()).round();
        raw.clamp(0.0, (self.num_points - 1) as f64) as usize
    }

    pub fn contains(&self, wavenumber: f64) -> bool {
        wavenumber >= self.min_wavenumber && wavenumber <= self.max_wavenumber
    }
}

fn parse_number(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok()
}

fn split_pair(line: &str) -> Option<(&str, &str)> {
    if let Some((a, b)) = line.split_once(',') {
        return Some((a, b));
    }
    let mut parts = line.split_whitespace();
    let a = parts.next()?;
    let b = parts.next()?;
    if parts.next().is_some() {
        return None;
    }
    Some((a, b))
}

/// Parses one spectrum file.
///
/// Data pairs are sorted by wavenumber; repeated wavenumbers are collapsed
/// to the mean of their intensities.
pub fn parse_spectrum_file(text: &str) -> Result<(SpectrumMetadata, Spectrum), SpectrumError> {
    let mut meta = SpectrumMetadata::default();
    let mut pairs: Vec<(f64, f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix("##") {
            let (key, value) = header.split_once('=').unwrap_or((header, ""));
            let key = key.trim().to_ascii_uppercase();
            let value = value.trim().to_string();
            match key.as_str() {
                "NAMES" => meta.mineral_name = value,
                "RRUFFID" => meta.source_id = value,
                "END" => {}
                _ => {
                    meta.extra.insert(key, value);
                }
            }
            continue;
        }
        let malformed = || SpectrumError::MalformedLine {
            line: line_no,
            content: raw.to_string(),
        };
        let (a, b) = split_pair(line).ok_or_else(malformed)?;
        let x = parse_number(a).ok_or_else(malformed)?;
        let y = parse_number(b).ok_or_else(malformed)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(SpectrumError::NonFiniteValue { line: line_no });
        }
        pairs.push((x, y));
    }

    if pairs.is_empty() {
        return Err(SpectrumError::EmptySpectrum);
    }
    // Stable sort keeps file order among duplicates; the mean is order-independent anyway.
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut wavenumbers = Vec::with_capacity(pairs.len());
    let mut intensities = Vec::with_capacity(pairs.len());
    let mut i = 0;
    while i < pairs.len() {
        let x = pairs[i].0;
        let mut j = i;
        let mut sum = 0.0;
        while j < pairs.len() && pairs[j].0 == x {
            sum += pairs[j].1;
            j += 1;
        }
        wavenumbers.push(x);
        intensities.push(sum / (j - i) as f64);
        i = j;
    }

    // A file whose points all share one wavenumber parses to a one-point
    // spectrum; `load_dataset` rejects those as too short to resample.
    Ok((
        meta,
        Spectrum {
            wavenumbers,
            intensities,
        },
    ))
}

/// Writes a spectrum in the same format [`parse_spectrum_file`] reads.
pub fn serialize_spectrum(meta: &SpectrumMetadata, spectrum: &Spectrum) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "##NAMES={}", meta.mineral_name);
    if !meta.source_id.is_empty() {
        let _ = writeln!(out, "##RRUFFID={}", meta.source_id);
    }
    for (k, v) in &meta.extra {
        let _ = writeln!(out, "##{k}={v}");
    }
    for (x, y) in spectrum.wavenumbers.iter().zip(&spectrum.intensities) {
        // `{}` on f64 prints the shortest string that parses back to the same bits.
        let _ = writeln!(out, "{x}, {y}");
    }
    let _ = writeln!(out, "##END=");
    out
}

/// Linear interpolation onto `grid`; grid points outside the measured span are 0.
pub fn resample(spectrum: &Spectrum, grid: &GridSpec) -> Vec<f64> {
    let xs = &spectrum.wavenumbers;
    let ys = &spectrum.intensities;
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    (0..grid.num_points)
        .map(|i| {
            let x = grid.point(i);
            if x < lo || x > hi {
                return 0.0;
            }
            // First sample strictly greater than x.
            let upper = xs.partition_point(|&v| v <= x);
            if upper == 0 {
                return ys[0];
            }
            let k = upper - 1;
            if xs[k] == x || k + 1 == xs.len() {
                return ys[k];
            }
            let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
            ys[k] + t * (ys[k + 1] - ys[k])
        })
        .collect()
}

/// Min-max scaling to `[0, 1]`; a constant vector maps to zeros.
pub fn normalize(vector: &[f64]) -> Vec<f64> {
    let (min, max) = vector
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = max - min;
    if vector.is_empty() || range <= 0.0 || !range.is_finite() {
        return vec![0.0; vector.len()];
    }
    vector
        .iter()
        .map(|&v| ((v - min) / range).clamp(0.0, 1.0))
        .collect()
}

/// Resample followed by normalize.
pub fn preprocess(spectrum: &Spectrum, grid: &GridSpec) -> Vec<f64> {
    normalize(&resample(spectrum, grid))
}

/// Fixed-grid spectral vectors with mineral labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub grid: GridSpec,
}

impl LabeledDataset {
    pub fn new(
        vectors: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        grid: GridSpec,
    ) -> Result<Self, DatasetError> {
        let ds = Self {
            vectors,
            labels,
            class_names,
            grid,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.vectors.len() != self.labels.len() {
            return Err(DatasetError::CountMismatch(self.vectors.len(), self.labels.len()));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &self.class_names {
            if !seen.insert(name.to_lowercase()) {
                return Err(DatasetError::DuplicateClass(name.clone()));
            }
        }
        for &label in &self.labels {
            if label >= self.class_names.len() {
                return Err(DatasetError::LabelOutOfRange {
                    label,
                    classes: self.class_names.len(),
                });
            }
        }
        for (row, v) in self.vectors.iter().enumerate() {
            if v.len() != self.grid.num_points {
                return Err(DatasetError::RowLength {
                    row,
                    len: v.len(),
                    expected: self.grid.num_points,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Samples per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Indices of the rows belonging to each class, in row order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.class_names.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            grid: self.grid,
        }
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name.trim()))
    }
}

/// Outcome of a directory load besides the dataset itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub loaded: usize,
    /// Files whose mineral is not in the class list, counted per mineral name.
    pub skipped: BTreeMap<String, usize>,
    /// Files that failed to parse, with the reason.
    pub failures: Vec<(String, String)>,
}

impl LoadReport {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "loaded: {}", self.loaded);
        let _ = writeln!(out, "skipped: {}", self.skipped_total());
        for (name, n) in &self.skipped {
            let _ = writeln!(out, "skipped.{name}: {n}");
        }
        let _ = writeln!(out, "failed: {}", self.failures.len());
        for (file, reason) in &self.failures {
            let _ = writeln!(out, "failed.{file}: {reason}");
        }
        out
    }
}

/// Loads every file of `directory` whose mineral is listed in `class_names`.
///
/// Files are visited in file-name order. Parse failures are collected into the
/// report instead of aborting the load.
pub fn load_dataset(
    directory: &Path,
    class_names: &[String],
    grid: &GridSpec,
) -> Result<(LabeledDataset, LoadReport), LoadError> {
    let io_err = |source| LoadError::Io {
        path: directory.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(directory)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();

    let lookup: HashMap<String, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.trim().to_lowercase(), i))
        .collect();

    let mut report = LoadReport::default();
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let file_name = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        let parsed = fs::read(&path)
            .map_err(|e| e.to_string())
            .and_then(|bytes| String::from_utf8(bytes).map_err(|e| e.to_string()))
            .and_then(|text| parse_spectrum_file(&text).map_err(|e| e.to_string()))
            .and_then(|(meta, s)| {
                if s.len() < 2 {
                    Err(SpectrumError::TooShort(s.len()).to_string())
                } else {
                    Ok((meta, s))
                }
            });
        match parsed {
            Err(reason) => report.failures.push((file_name, reason)),
            Ok((meta, spectrum)) => {
                let name = meta.mineral_name.trim();
                match lookup.get(&name.to_lowercase()) {
                    Some(&label) => {
                        vectors.push(preprocess(&spectrum, grid));
                        labels.push(label);
                    }
                    None => {
                        let key = if name.is_empty() { "<unnamed>" } else { name };
                        *report.skipped.entry(key.to_string()).or_default() += 1;
                    }
                }
            }
        }
    }

    if vectors.is_empty() {
        return Err(LoadError::EmptyDataset(directory.to_path_buf()));
    }
    report.loaded = vectors.len();
    let ds = LabeledDataset::new(vectors, labels, class_names.to_vec(), *grid)?;
    Ok((ds, report))
}

pub const DATASET_FORMAT: &str = "rockclass.dataset";
pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetFileError {
    #[error("cannot access dataset file {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("not a dataset file: {0}")]
    Format(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// On-disk dataset: one JSON document stamped with the producing config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub format: String,
    pub version: u32,
    pub provenance: Provenance,
    pub dataset: LabeledDataset,
}

impl DatasetFile {
    pub fn new(dataset: LabeledDataset, provenance: Provenance) -> Self {
        Self {
            format: DATASET_FORMAT.to_string(),
            version: DATASET_FORMAT_VERSION,
            provenance,
            dataset,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("dataset serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetFileError> {
        let file: Self = serde_json::from_str(text).map_err(|e| DatasetFileError::Format(e.to_string()))?;
        if file.format != DATASET_FORMAT || file.version != DATASET_FORMAT_VERSION {
            return Err(DatasetFileError::Format(format!(
                "expected {DATASET_FORMAT} v{DATASET_FORMAT_VERSION}, found {} v{}",
                file.format, file.version
            )));
        }
        file.dataset.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetFileError> {
        fs::write(path, self.to_json()).map_err(|e| DatasetFileError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetFileError> {
        let text = fs::read_to_string(path).map_err(|e| DatasetFileError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_header_and_pairs() {
        let (meta, s) = parse_spectrum_file("##NAMES=Quartz\n100.0, 5.0\n101.0, 6.0").unwrap();
        assert_eq!(meta.mineral_name, "Quartz");
        assert_eq!(s.wavenumbers(), &[100.0, 101.0]);
        assert_eq!(s.intensities(), &[5.0, 6.0]);
    }

    #[test]
    fn duplicate_wavenumbers_are_averaged() {
        let (_, s) = parse_spectrum_file("##NAMES=Calcite\n200.0, 1.0\n200.0, 3.0").unwrap();
        assert_eq!(s.wavenumbers(), &[200.0]);
        assert_eq!(s.intensities(), &[2.0]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_spectrum_file("##NAMES=X\nabc, 1.0").unwrap_err();
        assert!(matches!(err, SpectrumError::MalformedLine { line: 2, .. }));
    }

    #[test]
    fn empty_and_non_finite_are_rejected() {
        assert_eq!(
            parse_spectrum_file("##NAMES=X\n##END=\n").unwrap_err(),
            SpectrumError::EmptySpectrum
        );
        assert_eq!(
            parse_spectrum_file("##NAMES=X\n1, 2\n2, NaN").unwrap_err(),
            SpectrumError::NonFiniteValue { line: 3 }
        );
        assert_eq!(
            parse_spectrum_file("##NAMES=X\ninf, 2\n2, 3").unwrap_err(),
            SpectrumError::NonFiniteValue { line: 2 }
        );
    }

    #[test]
    fn unsorted_data_is_sorted_and_extra_headers_kept() {
        let text = "##NAMES=Albite\n##RRUFFID=R050402\n##LOCALITY=Virginia\n3, 30\n1, 10\n2 20\n";
        let (meta, s) = parse_spectrum_file(text).unwrap();
        assert_eq!(meta.source_id, "R050402");
        assert_eq!(meta.extra.get("LOCALITY").map(String::as_str), Some("Virginia"));
        assert_eq!(s.wavenumbers(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.intensities(), &[10.0, 20.0, 30.0]);
    }

    #[test]
    fn resample_examples() {
        let g = |a, b, n| GridSpec::new(a, b, n).unwrap();
        let s = Spectrum::new(vec![0.0, 1.0], vec![0.0, 10.0]).unwrap();
        assert_eq!(resample(&s, &g(0.0, 1.0, 2)), vec![0.0, 10.0]);
        let s = Spectrum::new(vec![0.0, 2.0], vec![0.0, 10.0]).unwrap();
        assert_eq!(resample(&s, &g(0.0, 2.0, 3)), vec![0.0, 5.0, 10.0]);
        let s = Spectrum::new(vec![1.0, 2.0], vec![4.0, 4.0]).unwrap();
        assert_eq!(resample(&s, &g(0.0, 3.0, 4)), vec![0.0, 4.0, 4.0, 0.0]);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[0.0, 5.0, 10.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize(&[3.0, 3.0, 3.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(normalize(&[-2.0, 0.0, 2.0]), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(10.0, 10.0, 5).is_err());
        assert!(GridSpec::new(0.0, 10.0, 1).is_err());
        let g = GridSpec::default();
        assert_eq!(g.point(g.num_points - 1), 1500.0);
        assert_eq!(g.nearest_index(150.0), 0);
        assert_eq!(g.nearest_index(1e6), 1023);
    }

    #[test]
    fn dataset_invariants() {
        let grid = GridSpec::new(0.0, 1.0, 2).unwrap();
        assert!(matches!(
            LabeledDataset::new(vec![vec![0.0, 1.0]], vec![1], vec!["a".into()], grid),
            Err(DatasetError::LabelOutOfRange { .. })
        ));
        assert!(matches!(
            LabeledDataset::new(vec![vec![0.0]], vec![0], vec!["a".into()], grid),
            Err(DatasetError::RowLength { .. })
        ));
        assert!(matches!(
            LabeledDataset::new(vec![], vec![], vec!["a".into(), "A".into()], grid),
            Err(DatasetError::DuplicateClass(_))
        ));
    }

    #[test]
    fn dataset_file_round_trip() {
        let grid = GridSpec::new(0.0, 1.0, 3).unwrap();
        let ds = LabeledDataset::new(vec![vec![0.1, 1.0 / 3.0, 0.7]], vec![0], vec!["a".into()], grid).unwrap();
        let file = DatasetFile::new(ds, Provenance::new(&grid, 5));
        let text = file.to_json();
        assert_eq!(DatasetFile::from_json(&text).unwrap(), file);
        let stale = text.replace("\"version\":1", "\"version\":9");
        assert!(matches!(DatasetFile::from_json(&stale), Err(DatasetFileError::Format(_))));
        let broken = text.replace("[0.1,", "[0.1,0.2,");
        assert!(matches!(DatasetFile::from_json(&broken), Err(DatasetFileError::Dataset(_))));
    }

    fn spectrum_strategy() -> impl Strategy<Value = Spectrum> {
        (2usize..40, 0.0f64..500.0)
            .prop_flat_map(|(n, start)| {
                (
                    proptest::collection::vec(0.01f64..20.0, n),
                    proptest::collection::vec(-1e3f64..1e3, n),
                    Just(start),
                )
            })
            .prop_map(|(steps, ys, start)| {
                let mut x = start;
                let xs = steps
                    .iter()
                    .map(|s| {
                        x += s;
                        x
                    })
                    .collect();
                Spectrum::new(xs, ys).unwrap()
            })
    }

    proptest! {
        #[test]
        fn resample_is_idempotent_on_grid(values in proptest::collection::vec(-50.0f64..50.0, 2..64),
                                          lo in -100.0f64..100.0, width in 1.0f64..1000.0) {
            let grid = GridSpec::new(lo, lo + width, values.len()).unwrap();
            let s = Spectrum::on_grid(&grid, values.clone()).unwrap();
            let once = resample(&s, &grid);
            for (a, b) in once.iter().zip(&values) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let again = resample(&Spectrum::on_grid(&grid, once.clone()).unwrap(), &grid);
            prop_assert_eq!(once, again);
        }

        #[test]
        fn resample_keeps_coincident_samples(s in spectrum_strategy()) {
            // Grid spanning the spectrum exactly: endpoints coincide with samples.
            let n = s.len();
            let grid = GridSpec::new(s.wavenumbers()[0], s.wavenumbers()[n - 1], 2 * n + 1).unwrap();
            let r = resample(&s, &grid);
            prop_assert_eq!(r[0], s.intensities()[0]);
            prop_assert_eq!(r[grid.num_points - 1], s.intensities()[n - 1]);
        }

        #[test]
        fn normalize_bounds(v in proptest::collection::vec(-1e6f64..1e6, 1..100)) {
            let out = normalize(&v);
            prop_assert!(out.iter().all(|x| (0.0..=1.0).contains(x)));
            let constant = v.iter().all(|x| *x == v[0]);
            if !constant {
                prop_assert!(out.contains(&0.0));
                prop_assert!(out.contains(&1.0));
            }
        }

        #[test]
        fn serialize_round_trips(s in spectrum_strategy(), name in "[A-Z][a-z]{2,10}", id in "R[0-9]{6}") {
            let meta = SpectrumMetadata { mineral_name: name, source_id: id, extra: BTreeMap::from([("LOCALITY".to_string(), "Somewhere".to_string())]) };
            let text = serialize_spectrum(&meta, &s);
            let (meta2, s2) = parse_spectrum_file(&text).unwrap();
            prop_assert_eq!(meta, meta2);
            prop_assert_eq!(s, s2);
        }
    }
}
