use std::sync::OnceLock;

use rockclass::knowledge::{classify, default_knowledge_base, RockLabel};
use rockclass::neural::{train, Architecture, CnnConfig, Model, ModelVariant, TrainConfig};
use rockclass::pipeline::*;
use rockclass::spectra::{serialize_spectrum, GridSpec, Spectrum, SpectrumMetadata};
use rockclass::synthgen::{default_mineral_specs, make_synthetic_corpus, SyntheticMineralSpec};
use rockclass::UNKNOWN_LABEL;

fn model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| {
        let grid = GridSpec::default();
        let ds = make_synthetic_corpus(&default_mineral_specs(), 30, &grid, 0.02, 3).unwrap();
        let cfg = TrainConfig {
            max_epochs: 12,
            seed: 3,
            ..TrainConfig::default()
        };
        train(&ds, &Architecture::Cnn(CnnConfig::for_dataset(&ds)), ModelVariant::CnnUncertainty, &cfg).unwrap()
    })
}

fn spec(name: &str) -> SyntheticMineralSpec {
    default_mineral_specs()
        .into_iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
        .unwrap()
}

/// Noise-free spectra for a list of species names.
fn spectra_for(labels: &[&str]) -> Vec<Spectrum> {
    let grid = GridSpec::default();
    labels
        .iter()
        .map(|l| Spectrum::on_grid(&grid, spec(l).profile(&grid)).unwrap())
        .collect()
}

fn config() -> PipelineConfig {
    PipelineConfig {
        inference: TrainConfig {
            seed: 3,
            ..TrainConfig::default()
        },
        ..PipelineConfig::default()
    }
}

#[test]
fn calcite_sample_is_limestone() {
    let kb = default_knowledge_base();
    let sample = SampleMeasurements::from_spectra("s25", spectra_for(&["Calcite"; 10]));
    for mode in [ClassifyMode::Base, ClassifyMode::UncertaintyAware] {
        let r = classify_sample(&sample, model(), &kb, mode, &GridSpec::default(), &config()).unwrap();
        assert_eq!(r.mineral_labels, vec!["Calcite"; 10], "{mode:?}");
        assert_eq!(r.classification.label, RockLabel::Rock("Limestone".into()));
        assert_eq!(r.predictions.len(), 10);
    }
}

#[test]
fn spectral_and_label_modes_agree_on_clean_spectra() {
    let kb = default_knowledge_base();
    let compositions: [&[&str]; 3] = [
        &["Quartz", "Albite", "Orthoclase", "Quartz", "Albite", "Anorthite", "Muscovite", "Quartz", "Albite", "Orthoclase"],
        &["Quartz", "Quartz", "Quartz", "Quartz", "Quartz", "Quartz", "Quartz", "Quartz", "Albite", "Calcite"],
        &["Calcite", "Calcite", "Dolomite", "Calcite", "Calcite", "Calcite", "Dolomite", "Calcite", "Calcite", "Calcite"],
    ];
    for labels in compositions {
        let sample = SampleMeasurements::from_spectra("mix", spectra_for(labels));
        let r = classify_sample(&sample, model(), &kb, ClassifyMode::Base, &GridSpec::default(), &config()).unwrap();
        assert_eq!(r.mineral_labels, labels);
        let oracle = classify_labels("mix", labels, &kb).unwrap();
        assert_eq!(r.classification, oracle.classification);
    }
}

#[test]
fn nine_points_are_too_few() {
    let kb = default_knowledge_base();
    let sample = SampleMeasurements::from_spectra("s", spectra_for(&["Calcite"; 9]));
    let err = classify_sample(&sample, model(), &kb, ClassifyMode::Base, &GridSpec::default(), &config()).unwrap_err();
    assert_eq!(err, PipelineError::TooFewPoints { have: 9, need: 10 });
    assert_eq!(err.to_string(), "TooFewPoints (9 < 10)");

    let relaxed = PipelineConfig {
        min_points: 9,
        ..config()
    };
    assert!(classify_sample(&sample, model(), &kb, ClassifyMode::Base, &GridSpec::default(), &relaxed).is_ok());
}

#[test]
fn grid_must_match_the_model() {
    let kb = default_knowledge_base();
    let sample = SampleMeasurements::from_spectra("s", spectra_for(&["Calcite"; 10]));
    let other = GridSpec::new(100.0, 1500.0, 1024).unwrap();
    assert!(matches!(
        classify_sample(&sample, model(), &kb, ClassifyMode::Base, &other, &config()),
        Err(PipelineError::GridMismatch { .. })
    ));
}

#[test]
fn unreadable_points_become_unknown() {
    let kb = default_knowledge_base();
    let grid = GridSpec::default();
    let dir = tempfile::tempdir().unwrap();
    let sample_dir = dir.path().join("sample-7");
    std::fs::create_dir(&sample_dir).unwrap();
    for (i, s) in spectra_for(&["Calcite"; 10]).iter().enumerate() {
        let meta = SpectrumMetadata::default();
        std::fs::write(sample_dir.join(format!("p{i:02}.txt")), serialize_spectrum(&meta, s)).unwrap();
    }
    std::fs::write(sample_dir.join("p10.txt"), "not a spectrum\n").unwrap();

    let sample = SampleMeasurements::load_dir(&sample_dir).unwrap();
    assert_eq!(sample.sample_id, "sample-7");
    assert_eq!(sample.points.len(), 11);
    assert_eq!(sample.valid_points(), 10);
    let r = classify_sample(&sample, model(), &kb, ClassifyMode::Base, &grid, &config()).unwrap();
    assert_eq!(r.mineral_labels.last().unwrap(), UNKNOWN_LABEL);
    assert!(r.predictions.last().unwrap().is_none());
    // 10/11 calcite is 0.909, still inside the calcite range.
    assert_eq!(r.classification.label, RockLabel::Rock("Limestone".into()));
    assert!((r.classification.proportions["calcite"] - 10.0 / 11.0).abs() < 1e-12);
}

#[test]
fn unknown_never_fires_an_exclusion() {
    let kb = default_knowledge_base();
    let mut labels = vec!["Calcite"; 9];
    labels.push(UNKNOWN_LABEL);
    let r = classify_labels("u", &labels, &kb).unwrap();
    assert!(r.classification.fired_exclusions.is_empty());
    assert_eq!(r.classification, classify(&labels, &kb).unwrap());

    // A threshold of 1 turns every point UNKNOWN: nothing is vetoed, nothing accepted.
    let strict = PipelineConfig {
        inference: TrainConfig {
            unknown_threshold: 1.0,
            ..config().inference
        },
        ..config()
    };
    let sample = SampleMeasurements::from_spectra("all-unknown", spectra_for(&["Calcite"; 10]));
    let r = classify_sample(&sample, model(), &kb, ClassifyMode::UncertaintyAware, &GridSpec::default(), &strict).unwrap();
    assert!(r.mineral_labels.iter().all(|l| l == UNKNOWN_LABEL));
    assert!(r.classification.fired_exclusions.is_empty());
    assert!(r.classification.label.is_other());
}

#[test]
fn uncertainty_mode_is_deterministic() {
    let kb = default_knowledge_base();
    let sample = SampleMeasurements::from_spectra("d", spectra_for(&["Quartz", "Calcite", "Dolomite", "Albite", "Calcite", "Calcite", "Calcite", "Calcite", "Calcite", "Calcite"]));
    let run = || {
        classify_sample(&sample, model(), &kb, ClassifyMode::UncertaintyAware, &GridSpec::default(), &config())
            .unwrap()
            .to_record()
    };
    assert_eq!(run(), run());
}

#[test]
fn batch_of_spectral_samples_isolates_failures() {
    let kb = default_knowledge_base();
    let inputs = vec![
        SampleInput::Spectra(SampleMeasurements::from_spectra("ok", spectra_for(&["Calcite"; 10]))),
        SampleInput::Spectra(SampleMeasurements::from_spectra("short", spectra_for(&["Calcite"; 3]))),
        SampleInput::Labels {
            sample_id: "labels".into(),
            labels: vec!["Quartz".into()],
        },
    ];
    let out = classify_batch(&inputs, Some(model()), &kb, ClassifyMode::Base, &GridSpec::default(), &config());
    assert_eq!(out.results.len(), 2);
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].sample_id, "short");
    assert_eq!(out.failures[0].error, "TooFewPoints (3 < 10)");
}
