//! `rockclass`: ingest spectra, synthesise corpora, train classifiers,
//! classify rock samples and evaluate the results.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod commands;
mod config;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Internal(m) => m,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "rockclass", version, about = "Raman mineral classification and rock-type deduction")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Run configuration (TOML); see rockclass.example.toml.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Cnn,
    Mlp,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a directory of spectrum files into a dataset file.
    Ingest {
        dir: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Expand every class with the configured augmentation.
        #[arg(long)]
        augment: bool,
    },
    /// Generate the synthetic Gaussian-peak corpus.
    Synth {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        /// Mineral peak tables (TOML).
        #[arg(long)]
        specs: Option<PathBuf>,
    },
    /// Train a classifier on a dataset file.
    Train {
        dataset: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "cnn")]
        model: ModelKind,
        /// Train the Monte Carlo dropout variant of the CNN.
        #[arg(long)]
        uncertainty: bool,
        /// Per-epoch history report.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Classify rock samples from spectra or from mineral label lists.
    Classify {
        /// Trained checkpoint; required unless --labels is used.
        #[arg(long)]
        model: Option<PathBuf>,
        /// One sample directory, or a directory of sample directories.
        #[arg(long, conflicts_with = "labels")]
        samples: Option<PathBuf>,
        /// Label files, one sample each (labels separated by commas or newlines).
        #[arg(long, num_args = 1..)]
        labels: Vec<PathBuf>,
        /// Monte Carlo dropout inference with UNKNOWN rejection.
        #[arg(long)]
        uncertainty: bool,
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Record stream destination; standard output when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Cross-validate classifiers or run the golden expert-system suite.
    Evaluate {
        /// Dataset file to cross-validate.
        #[arg(long, value_name = "DATASET", required_unless_present = "golden")]
        cv: Option<PathBuf>,
        #[arg(long)]
        golden: bool,
        /// Golden fixture; the copy built into the binary when omitted.
        #[arg(long, requires = "golden")]
        fixture: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, value_enum, default_value = "cnn")]
        model: ModelKind,
        #[arg(long)]
        uncertainty: bool,
        /// Cross-validate the CNN, its uncertainty variant and the MLP.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Directory for report files and plot tables.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Summarise a classify record stream.
    Report {
        stream: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match cli.command {
        Command::Ingest { dir, out, augment } => commands::ingest(g, &dir, &out, augment),
        Command::Synth {
            out,
            per_class,
            noise,
            specs,
        } => commands::synth(g, &out, per_class, noise, specs),
        Command::Train {
            dataset,
            out,
            model,
            uncertainty,
            history,
            max_epochs,
        } => commands::train(g, &dataset, &out, model, uncertainty, history.as_deref(), max_epochs),
        Command::Classify {
            model,
            samples,
            labels,
            uncertainty,
            kb,
            out,
        } => commands::classify(
            g,
            commands::ClassifyArgs {
                model,
                samples,
                labels,
                uncertainty,
                kb,
                out,
            },
        ),
        Command::Evaluate {
            cv,
            golden,
            fixture,
            k,
            model,
            uncertainty,
            all,
            max_epochs,
            kb,
            out_dir,
        } => {
            if golden {
                commands::evaluate_golden(g, fixture.as_deref(), kb, out_dir.as_deref())?;
            }
            match cv {
                Some(ds) => commands::evaluate_cv(
                    g,
                    commands::CvArgs {
                        dataset: ds,
                        k,
                        model,
                        uncertainty,
                        all,
                        max_epochs,
                        out_dir,
                    },
                ),
                None => Ok(()),
            }
        }
        Command::Report { stream, out } => commands::report(&stream, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = std::panic::catch_unwind(|| run(cli))
        .unwrap_or_else(|_| Err(CliError::Internal("internal invariant violated (panic)".into())));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
