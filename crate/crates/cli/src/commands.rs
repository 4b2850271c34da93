use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rockclass::eval::{
    cross_validate, cv_bar_table, embedded_fixture, load_golden_fixture, metrics, parse_golden_fixture, run_golden_cases,
    CvReport,
};
use rockclass::neural::{self, load_checkpoint, save_checkpoint, Architecture, CnnConfig, MlpConfig, ModelVariant};
use rockclass::pipeline::{classify_batch, ClassifyMode, SampleInput, SampleMeasurements};
use rockclass::provenance::Provenance;
use rockclass::spectra::{load_dataset, DatasetFile, LoadError};
use rockclass::synthgen::{default_mineral_specs, expand_dataset, load_mineral_specs, make_synthetic_corpus};
use serde::Serialize;

use crate::config::RunConfig;
use crate::records::{text_header, ClassifyStream, StreamHeader, FORMAT_VERSION, STREAM_FORMAT};
use crate::{CliError, GlobalArgs, ModelKind};

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

/// Defaults, then the config file, then the global `--seed`.
fn base_config(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(g.config.as_deref())?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn ingest(g: &GlobalArgs, dir: &Path, out: &Path, augment: bool) -> Result<(), CliError> {
    let cfg = base_config(g)?.resolve()?;
    let (ds, report) = load_dataset(dir, &cfg.class_names, &cfg.grid).map_err(|e| match e {
        LoadError::EmptyDataset(p) => CliError::Data(format!("no spectra found in {}", p.display())),
        other => data(other),
    })?;
    print!("{}", report.to_text());
    let ds = if augment {
        let (expanded, manifest) = expand_dataset(&ds, &cfg.augment).map_err(data)?;
        print!("{}", manifest.to_text());
        expanded
    } else {
        ds
    };
    let n = ds.len();
    DatasetFile::new(ds, cfg.provenance()).save(out).map_err(data)?;
    println!("wrote {} ({n} spectra)", out.display());
    Ok(())
}

pub fn synth(
    g: &GlobalArgs,
    out: &Path,
    per_class: Option<usize>,
    noise: Option<f64>,
    specs: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = base_config(g)?;
    if let Some(n) = per_class {
        cfg.synth.per_class = n;
    }
    if let Some(s) = noise {
        cfg.synth.noise_sigma = s;
    }
    if specs.is_some() {
        cfg.synth.specs_path = specs;
    }
    let cfg = cfg.resolve()?;
    let specs = match &cfg.synth.specs_path {
        Some(p) => load_mineral_specs(p).map_err(data)?,
        None => {
            let builtin = default_mineral_specs();
            cfg.class_names
                .iter()
                .map(|name| {
                    builtin
                        .iter()
                        .find(|s| s.name.eq_ignore_ascii_case(name))
                        .cloned()
                        .ok_or_else(|| CliError::Usage(format!("no built-in peak table for class {name:?}; set synth.specs_path")))
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let ds = make_synthetic_corpus(&specs, cfg.synth.per_class, &cfg.grid, cfg.synth.noise_sigma, cfg.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let n = ds.len();
    DatasetFile::new(ds, cfg.provenance()).save(out).map_err(data)?;
    println!("wrote {} ({n} spectra, {} classes)", out.display(), specs.len());
    Ok(())
}

fn architecture(cfg: &RunConfig, kind: ModelKind, ds: &rockclass::LabeledDataset) -> Architecture {
    match kind {
        ModelKind::Cnn => Architecture::Cnn(CnnConfig {
            input_length: ds.grid.num_points,
            num_classes: ds.num_classes(),
            ..cfg.cnn
        }),
        ModelKind::Mlp => Architecture::Mlp(MlpConfig {
            input_length: ds.grid.num_points,
            num_classes: ds.num_classes(),
            ..cfg.mlp.clone()
        }),
    }
}

fn variant(kind: ModelKind, uncertainty: bool) -> Result<ModelVariant, CliError> {
    match (kind, uncertainty) {
        (ModelKind::Cnn, false) => Ok(ModelVariant::Cnn),
        (ModelKind::Cnn, true) => Ok(ModelVariant::CnnUncertainty),
        (ModelKind::Mlp, false) => Ok(ModelVariant::Mlp),
        (ModelKind::Mlp, true) => Err(CliError::Usage("--uncertainty applies to the CNN only".into())),
    }
}

pub fn train(
    g: &GlobalArgs,
    dataset: &Path,
    out: &Path,
    kind: ModelKind,
    uncertainty: bool,
    history: Option<&Path>,
    max_epochs: Option<usize>,
) -> Result<(), CliError> {
    let mut cfg = base_config(g)?;
    if let Some(m) = max_epochs {
        cfg.train.max_epochs = m;
    }
    let cfg = cfg.resolve()?;
    let variant = variant(kind, uncertainty)?;
    let stage = |name: &str, e: &dyn std::fmt::Display| CliError::Data(format!("training failed at stage {name}: {e}"));

    let ds = DatasetFile::load(dataset).map_err(|e| stage("load dataset", &e))?.dataset;
    let arch = architecture(&cfg, kind, &ds);
    let model = neural::train(&ds, &arch, variant, &cfg.train).map_err(|e| stage("train", &e))?;
    let provenance = cfg.provenance();
    save_checkpoint(out, &model, &provenance).map_err(|e| stage("write checkpoint", &e))?;

    let mut report = text_header("train-history", &provenance);
    let _ = writeln!(report, "# variant: {}", model.variant.name());
    report.push_str("epoch\ttrain_loss\tval_loss\tval_accuracy\n");
    for h in &model.history {
        let acc = h.val_accuracy.map_or_else(|| "-".to_string(), |a| format!("{a:.6}"));
        let _ = writeln!(report, "{}\t{:.6}\t{:.6}\t{acc}", h.epoch, h.train_loss, h.val_loss);
    }
    let _ = writeln!(report, "best_epoch\t{}", model.best_epoch);
    if let Some(path) = history {
        write_file(path, report.as_bytes()).map_err(|e| stage("write history", &e.message().to_string()))?;
    }

    let best = model.history.iter().find(|h| h.epoch == model.best_epoch);
    println!(
        "model: {}{}",
        model.variant.name(),
        if model.variant.uncertainty_aware() { " (uncertainty-capable)" } else { "" }
    );
    println!("epochs: {}, best epoch: {}", model.history.len(), model.best_epoch);
    if let Some(acc) = best.and_then(|h| h.val_accuracy) {
        println!("validation accuracy: {acc:.4}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub struct ClassifyArgs {
    pub model: Option<PathBuf>,
    pub samples: Option<PathBuf>,
    pub labels: Vec<PathBuf>,
    pub uncertainty: bool,
    pub kb: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Sub-directories are samples; a directory without any is itself one sample.
fn sample_dirs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Data(format!("cannot read {}: {e}", dir.display())))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        subdirs.push(dir.to_path_buf());
    }
    Ok(subdirs)
}

fn read_labels(path: &Path) -> Result<SampleInput, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let labels = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(','))
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    let sample_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SampleInput::Labels { sample_id, labels })
}

pub fn classify(g: &GlobalArgs, args: ClassifyArgs) -> Result<(), CliError> {
    let mut cfg = base_config(g)?;
    if args.kb.is_some() {
        cfg.kb_path = args.kb;
    }
    let cfg = cfg.resolve()?;
    let kb = cfg.knowledge_base()?;

    let (inputs, mode, model) = if !args.labels.is_empty() {
        if args.model.is_some() || args.uncertainty {
            return Err(CliError::Usage("--labels skips the mineral classifier; drop --model and --uncertainty".into()));
        }
        let inputs = args.labels.iter().map(|p| read_labels(p)).collect::<Result<Vec<_>, _>>()?;
        (inputs, ClassifyMode::OracleLabels, None)
    } else {
        let dir = args
            .samples
            .ok_or_else(|| CliError::Usage("give --samples DIR or --labels FILE...".into()))?;
        let ckpt = args
            .model
            .ok_or_else(|| CliError::Usage("--samples needs --model CHECKPOINT".into()))?;
        let (model, _) = load_checkpoint(&ckpt).map_err(|e| CliError::Data(format!("{}: {e}", ckpt.display())))?;
        if args.uncertainty && !model.variant.uncertainty_aware() {
            return Err(CliError::Usage(format!(
                "--uncertainty needs a checkpoint trained with --uncertainty, {} is {}",
                ckpt.display(),
                model.variant.name()
            )));
        }
        let mut inputs = Vec::new();
        for d in sample_dirs(&dir)? {
            inputs.push(SampleInput::Spectra(SampleMeasurements::load_dir(&d).map_err(data)?));
        }
        let mode = if args.uncertainty {
            ClassifyMode::UncertaintyAware
        } else {
            ClassifyMode::Base
        };
        (inputs, mode, Some(model))
    };

    let outcome = classify_batch(&inputs, model.as_ref(), &kb, mode, &cfg.grid, &cfg.pipeline());
    let stream = ClassifyStream {
        header: StreamHeader {
            format: STREAM_FORMAT.to_string(),
            version: FORMAT_VERSION,
            mode: mode.as_str().to_string(),
            provenance: cfg.provenance(),
        },
        results: outcome.results,
        failures: outcome.failures,
    };
    match &args.out {
        Some(path) => {
            write_file(path, stream.to_jsonl().as_bytes())?;
            for r in &stream.results {
                let c = &r.classification;
                println!("{}\t{}\tw_max {:.2}\tmargin {:.2}", r.sample_id, c.label, c.w_max, c.margin);
            }
            println!("wrote {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(stream.to_jsonl().as_bytes())
                .map_err(|e| CliError::Data(format!("cannot write output: {e}")))?;
        }
    }
    for f in &stream.failures {
        eprintln!("{}: {}", f.sample_id, f.error);
    }
    if stream.results.is_empty() && !stream.failures.is_empty() {
        return Err(CliError::Data(format!("all {} samples failed", stream.failures.len())));
    }
    Ok(())
}

pub fn evaluate_golden(
    g: &GlobalArgs,
    fixture: Option<&Path>,
    kb: Option<PathBuf>,
    out_dir: Option<&Path>,
) -> Result<(), CliError> {
    let mut cfg = base_config(g)?;
    if kb.is_some() {
        cfg.kb_path = kb;
    }
    let cfg = cfg.resolve()?;
    let kb = cfg.knowledge_base()?;
    let cases = match fixture {
        Some(p) => load_golden_fixture(p),
        None => parse_golden_fixture(embedded_fixture()),
    }
    .map_err(data)?;
    let report = run_golden_cases(&cases, &kb).map_err(data)?;
    print!("{}", report.to_text());
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        let text = text_header("golden-report", &cfg.provenance()) + &report.to_text();
        write_file(&dir.join("golden_report.tsv"), text.as_bytes())?;
    }
    if report.oracle_matches != report.total {
        let failed: Vec<u32> = report
            .outcomes
            .iter()
            .filter(|o| !o.oracle_match)
            .map(|o| o.case_id)
            .collect();
        return Err(CliError::Data(format!("golden regression on cases {failed:?}")));
    }
    Ok(())
}

pub struct CvArgs {
    pub dataset: PathBuf,
    pub k: usize,
    pub model: ModelKind,
    pub uncertainty: bool,
    pub all: bool,
    pub max_epochs: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct CvFile<'a> {
    format: &'static str,
    version: u32,
    #[serde(flatten)]
    provenance: &'a Provenance,
    report: &'a CvReport,
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

/// Per-class accuracy, one column per model.
fn per_class_table(reports: &[CvReport]) -> String {
    let mut s = String::from("class");
    for r in reports {
        let _ = write!(s, "\t{}", r.variant.name());
    }
    s.push('\n');
    let columns: Vec<Vec<(String, Option<f64>)>> = reports.iter().map(CvReport::per_class_accuracy).collect();
    for (i, (class, _)) in columns[0].iter().enumerate() {
        s.push_str(class);
        for col in &columns {
            match col.get(i).and_then(|(_, v)| *v) {
                Some(v) => {
                    let _ = write!(s, "\t{v:.6}");
                }
                None => s.push_str("\tundefined"),
            }
        }
        s.push('\n');
    }
    s
}

pub fn evaluate_cv(g: &GlobalArgs, args: CvArgs) -> Result<(), CliError> {
    let mut cfg = base_config(g)?;
    if let Some(m) = args.max_epochs {
        cfg.train.max_epochs = m;
    }
    let cfg = cfg.resolve()?;
    if args.k < 2 {
        return Err(CliError::Usage("--k must be at least 2".into()));
    }
    let runs = if args.all {
        vec![
            (ModelKind::Cnn, ModelVariant::Cnn),
            (ModelKind::Cnn, ModelVariant::CnnUncertainty),
            (ModelKind::Mlp, ModelVariant::Mlp),
        ]
    } else {
        vec![(args.model, variant(args.model, args.uncertainty)?)]
    };
    let ds = DatasetFile::load(&args.dataset).map_err(data)?.dataset;
    let provenance = cfg.provenance();

    let mut reports = Vec::new();
    for (kind, v) in runs {
        let arch = architecture(&cfg, kind, &ds);
        let report = cross_validate(&ds, v, &arch, &cfg.train, args.k, cfg.seed).map_err(data)?;
        println!("{}", report.summary_line());
        reports.push(report);
    }
    if let Some(dir) = &args.out_dir {
        create_dir(dir)?;
        for r in &reports {
            let name = r.variant.name();
            let file = CvFile {
                format: "rockclass.cv-report",
                version: FORMAT_VERSION,
                provenance: &provenance,
                report: r,
            };
            let json = serde_json::to_string_pretty(&file).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
            write_file(&dir.join(format!("cv_{name}.json")), json.as_bytes())?;
            let matrix = text_header("confusion", &provenance) + &r.confusion.to_tsv();
            write_file(&dir.join(format!("confusion_{name}.tsv")), matrix.as_bytes())?;
            let m = text_header("metrics", &provenance) + &metrics(&r.confusion).to_text();
            write_file(&dir.join(format!("metrics_{name}.txt")), m.as_bytes())?;
        }
        let bars = text_header("cv-bars", &provenance) + &cv_bar_table(&reports);
        write_file(&dir.join("cv_bars.tsv"), bars.as_bytes())?;
        let per_class = text_header("per-class-accuracy", &provenance) + &per_class_table(&reports);
        write_file(&dir.join("per_class_accuracy.tsv"), per_class.as_bytes())?;
        println!("wrote reports to {}", dir.display());
    } else {
        print!("{}", cv_bar_table(&reports));
    }
    Ok(())
}

pub fn report(stream: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let text = fs::read_to_string(stream).map_err(|e| CliError::Data(format!("cannot read {}: {e}", stream.display())))?;
    let summary = ClassifyStream::parse(&text)?.summary();
    match out {
        Some(path) => {
            write_file(path, summary.as_bytes())?;
            println!("wrote {}", path.display());
        }
        None => print!("{summary}"),
    }
    Ok(())
}
