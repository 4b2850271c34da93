//! Output formats owned by the command-line tool.
//!
//! `classify` writes a JSON-lines stream: one header line, then one line per
//! sample, each carrying its own `format` tag. Text reports start with a
//! comment header naming the format, the config hash and the seed.

use std::fmt::Write as _;

use rockclass::pipeline::{RockResult, SampleFailure, RESULT_FORMAT};
use rockclass::provenance::Provenance;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const STREAM_FORMAT: &str = "rockclass.classify-stream";
pub const ERROR_FORMAT: &str = "rockclass.sample-error";
pub const FORMAT_VERSION: u32 = 1;

pub fn text_header(kind: &str, provenance: &Provenance) -> String {
    format!(
        "# rockclass.{kind} v{FORMAT_VERSION}\n# config_hash: {}\n# seed: {}\n",
        provenance.config_hash, provenance.seed
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub format: String,
    pub version: u32,
    pub mode: String,
    #[serde(flatten)]
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct ErrorRecord {
    format: String,
    version: u32,
    #[serde(flatten)]
    failure: SampleFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyStream {
    pub header: StreamHeader,
    pub results: Vec<RockResult>,
    pub failures: Vec<SampleFailure>,
}

impl ClassifyStream {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serialises");
        out.push('\n');
        for r in &self.results {
            out.push_str(&r.to_record());
            out.push('\n');
        }
        for f in &self.failures {
            let rec = ErrorRecord {
                format: ERROR_FORMAT.to_string(),
                version: FORMAT_VERSION,
                failure: f.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("error record serialises"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |line: usize, msg: String| CliError::Data(format!("classify stream line {line}: {msg}"));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| bad(1, "empty stream".into()))?;
        let header: StreamHeader = serde_json::from_str(first).map_err(|e| bad(1, e.to_string()))?;
        if header.format != STREAM_FORMAT || header.version != FORMAT_VERSION {
            return Err(bad(1, format!("expected {STREAM_FORMAT} v{FORMAT_VERSION}")));
        }
        let mut stream = Self {
            header,
            results: Vec::new(),
            failures: Vec::new(),
        };
        for (i, line) in lines {
            let value: Value = serde_json::from_str(line).map_err(|e| bad(i + 1, e.to_string()))?;
            match value.get("format").and_then(Value::as_str) {
                Some(RESULT_FORMAT) => stream
                    .results
                    .push(RockResult::from_record(line).map_err(|e| bad(i + 1, e.to_string()))?),
                Some(ERROR_FORMAT) => {
                    let rec: ErrorRecord = serde_json::from_value(value).map_err(|e| bad(i + 1, e.to_string()))?;
                    if rec.version != FORMAT_VERSION {
                        return Err(bad(i + 1, format!("unsupported {ERROR_FORMAT} version {}", rec.version)));
                    }
                    stream.failures.push(rec.failure);
                }
                other => return Err(bad(i + 1, format!("unknown record format {other:?}"))),
            }
        }
        Ok(stream)
    }

    /// One row per sample plus label counts, for `report`.
    pub fn summary(&self) -> String {
        let mut s = text_header("rock-report", &self.header.provenance);
        let _ = writeln!(s, "# mode: {}", self.header.mode);
        s.push_str("sample\tlabel\tcandidate\tw_max\tmargin\tpoints\tunknown\texclusions\n");
        let mut counts = std::collections::BTreeMap::<String, usize>::new();
        for r in &self.results {
            let c = &r.classification;
            *counts.entry(c.label.to_string()).or_default() += 1;
            let unknown = r.mineral_labels.iter().filter(|l| *l == rockclass::UNKNOWN_LABEL).count();
            let exclusions: Vec<&str> = c.fired_exclusions.iter().map(|e| e.species.as_str()).collect();
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{}\t{}\t{}",
                r.sample_id,
                c.label,
                c.candidate.as_deref().unwrap_or("-"),
                c.w_max,
                c.margin,
                r.mineral_labels.len(),
                unknown,
                if exclusions.is_empty() { "-".to_string() } else { exclusions.join(",") }
            );
        }
        for f in &self.failures {
            let _ = writeln!(s, "{}\terror\t-\t-\t-\t-\t-\t{}", f.sample_id, f.error);
        }
        s.push_str("label\tcount\n");
        for (label, n) in &counts {
            let _ = writeln!(s, "{label}\t{n}");
        }
        let _ = writeln!(s, "errors\t{}", self.failures.len());
        s
    }
}
