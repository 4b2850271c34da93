use rockclass::spectra::{load_dataset, serialize_spectrum, GridSpec, LabeledDataset, Spectrum, SpectrumMetadata};
use rockclass::synthgen::*;

fn centroids(ds: &LabeledDataset) -> Vec<Vec<f64>> {
    ds.indices_by_class()
        .iter()
        .map(|rows| {
            let mut c = vec![0.0; ds.grid.num_points];
            for &r in rows {
                for (a, v) in c.iter_mut().zip(&ds.vectors[r]) {
                    *a += v / rows.len() as f64;
                }
            }
            c
        })
        .collect()
}

fn nearest_centroid_accuracy(ds: &LabeledDataset) -> f64 {
    let cs = centroids(ds);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let hits = ds
        .vectors
        .iter()
        .zip(&ds.labels)
        .filter(|(v, &l)| {
            let best = (0..cs.len())
                .min_by(|&i, &j| dist(v, &cs[i]).total_cmp(&dist(v, &cs[j])))
                .unwrap();
            best == l
        })
        .count();
    hits as f64 / ds.len() as f64
}

#[test]
fn disjoint_peaks_are_separable_by_centroid() {
    let grid = GridSpec::default();
    let specs = vec![
        SyntheticMineralSpec::new("A", &[(300.0, 8.0, 1.0)]),
        SyntheticMineralSpec::new("B", &[(900.0, 8.0, 1.0)]),
    ];
    let ds = make_synthetic_corpus(&specs, 20, &grid, 0.0, 1).unwrap();
    assert_eq!(nearest_centroid_accuracy(&ds), 1.0);
}

#[test]
fn shipped_corpus_is_separable_by_centroid() {
    let grid = GridSpec::default();
    let clean = make_synthetic_corpus(&default_mineral_specs(), 10, &grid, 0.0, 1).unwrap();
    assert_eq!(nearest_centroid_accuracy(&clean), 1.0);
    let noisy = make_synthetic_corpus(&default_mineral_specs(), 50, &grid, DEFAULT_CORPUS_NOISE, 1).unwrap();
    assert_eq!(noisy.class_counts(), vec![50; 14]);
    assert_eq!(nearest_centroid_accuracy(&noisy), 1.0);
}

#[test]
fn corpus_is_seeded() {
    let grid = GridSpec::default();
    let specs = default_mineral_specs();
    let a = make_synthetic_corpus(&specs, 5, &grid, 0.05, 9).unwrap();
    let b = make_synthetic_corpus(&specs, 5, &grid, 0.05, 9).unwrap();
    let c = make_synthetic_corpus(&specs, 5, &grid, 0.05, 10).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    assert_ne!(a.vectors, c.vectors);
}

#[test]
fn expansion_of_a_loaded_directory() {
    let grid = GridSpec::new(100.0, 1200.0, 256).unwrap();
    let specs = default_mineral_specs();
    let dir = tempfile::tempdir().unwrap();
    // Quartz gets 10 files (PCA path), calcite 3 (direct path), pyrite 2 (not a class).
    for (name, n) in [("Quartz", 10), ("Calcite", 3), ("Pyrite", 2)] {
        let spec = specs.iter().find(|s| s.name == name).unwrap();
        for i in 0..n {
            let mut profile = spec.profile(&grid);
            profile.iter_mut().for_each(|v| *v *= 1.0 + 0.01 * i as f64);
            let s = Spectrum::on_grid(&grid, profile).unwrap();
            let meta = SpectrumMetadata {
                mineral_name: name.to_string(),
                source_id: format!("R{i:06}"),
                ..Default::default()
            };
            std::fs::write(dir.path().join(format!("{name}_{i}.txt")), serialize_spectrum(&meta, &s)).unwrap();
        }
    }
    let classes = vec!["Quartz".to_string(), "Calcite".to_string()];
    let (ds, report) = load_dataset(dir.path(), &classes, &grid).unwrap();
    assert_eq!(ds.class_counts(), vec![10, 3]);
    assert_eq!(report.skipped_total(), 2);
    assert!(report.to_text().contains("skipped: 2\n"));

    let (big, manifest) = expand_dataset(&ds, &AugmentConfig::default()).unwrap();
    assert_eq!(big.class_counts(), vec![40, 12]);
    assert_eq!(manifest.classes[0].path, AugmentPath::Pca);
    assert_eq!(manifest.classes[1].path, AugmentPath::Direct);
    assert_eq!(&big.vectors[..ds.len()], &ds.vectors[..]);
    assert_eq!(nearest_centroid_accuracy(&big), 1.0);
}
