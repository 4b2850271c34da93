//! Frozen 30-case regression suite for the expert system.
//!
//! The fixture is a tab-separated file with a comment header carrying its
//! version and the SHA-256 of everything after the header. Each case stores
//! the reference result recorded with the composition and the locked expected
//! label of the implemented rules; regressions are judged on the latter.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::knowledge::{classify, KnowledgeBase, KnowledgeError, RockLabel};
use crate::provenance::sha256_hex;

pub const GOLDEN_FIXTURE_VERSION: u32 = 1;
const FIXTURE: &str = include_str!("../../data/golden_cases.tsv");
const COLUMNS: &str = "case_id\tlabels\trecorded_result\toracle_expected";

pub fn embedded_fixture() -> &'static str {
    FIXTURE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenCase {
    pub case_id: u32,
    pub labels: Vec<String>,
    pub recorded_result: String,
    pub oracle_expected: RockLabel,
}

impl GoldenCase {
    /// "Not a X" agrees with any label except X; a rock name needs an exact match.
    pub fn recorded_agrees(&self, label: &RockLabel) -> bool {
        match self.recorded_result.strip_prefix("Not a ") {
            Some(rock) => label.as_str() != rock.trim(),
            None => label.as_str() == self.recorded_result,
        }
    }

    pub fn is_rejection(&self) -> bool {
        self.recorded_result.starts_with("Not a ")
    }
}

fn corrupt(msg: impl Into<String>) -> EvalError {
    EvalError::FixtureCorrupt(msg.into())
}

pub fn parse_golden_fixture(text: &str) -> Result<Vec<GoldenCase>, EvalError> {
    let mut version = None;
    let mut checksum = None;
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let Some(comment) = line.strip_prefix('#') else {
            break;
        };
        body_start += line.len();
        let comment = comment.trim();
        if let Some(v) = comment.strip_prefix("version:") {
            version = Some(v.trim().parse::<u32>().map_err(|_| corrupt("unreadable version"))?);
        } else if let Some(c) = comment.strip_prefix("sha256:") {
            checksum = Some(c.trim().to_string());
        }
    }
    match version {
        Some(GOLDEN_FIXTURE_VERSION) => {}
        Some(v) => return Err(corrupt(format!("unsupported version {v}"))),
        None => return Err(corrupt("missing version header")),
    }
    let expected = checksum.ok_or_else(|| corrupt("missing sha256 header"))?;
    let body = &text[body_start..];
    let actual = sha256_hex(body.as_bytes());
    if actual != expected {
        return Err(corrupt(format!("checksum mismatch: header {expected}, content {actual}")));
    }

    let mut lines = body.lines();
    if lines.next() != Some(COLUMNS) {
        return Err(corrupt("unexpected column header"));
    }
    let mut cases = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, labels, recorded, expected] = fields.as_slice() else {
            return Err(corrupt(format!("row {}: expected 4 fields", i + 1)));
        };
        let labels: Vec<String> = labels.split(',').map(|l| l.trim().to_string()).collect();
        if labels.len() != 10 {
            return Err(corrupt(format!("row {}: {} labels, expected 10", i + 1, labels.len())));
        }
        cases.push(GoldenCase {
            case_id: id.parse().map_err(|_| corrupt(format!("row {}: bad case id", i + 1)))?,
            labels,
            recorded_result: recorded.to_string(),
            oracle_expected: RockLabel::from(expected.to_string()),
        });
    }
    if cases.len() != 30 {
        return Err(corrupt(format!("{} cases, expected 30", cases.len())));
    }
    Ok(cases)
}

pub fn load_golden_fixture(path: &Path) -> Result<Vec<GoldenCase>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => EvalError::FixtureMissing(path.display().to_string()),
        _ => corrupt(format!("{}: {e}", path.display())),
    })?;
    parse_golden_fixture(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenOutcome {
    pub case_id: u32,
    pub label: RockLabel,
    pub oracle_expected: RockLabel,
    pub oracle_match: bool,
    pub recorded_result: String,
    pub recorded_agrees: bool,
    pub w_max: f64,
    pub margin: f64,
    pub fired_exclusions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenReport {
    pub fixture_version: u32,
    pub outcomes: Vec<GoldenOutcome>,
    pub oracle_matches: usize,
    pub recorded_agreements: usize,
    pub total: usize,
}

impl GoldenReport {
    pub fn summary_line(&self) -> String {
        format!(
            "oracle match {}/{}, recorded agreement {}/{}",
            self.oracle_matches, self.total, self.recorded_agreements, self.total
        )
    }

    pub fn divergences(&self) -> Vec<u32> {
        self.outcomes
            .iter()
            .filter(|o| !o.recorded_agrees)
            .map(|o| o.case_id)
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = self.summary_line();
        s.push('\n');
        s.push_str("case\tlabel\texpected\tmatch\trecorded\tagrees\tw_max\tmargin\texclusions\n");
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.2}\t{:.2}\t{}",
                o.case_id,
                o.label,
                o.oracle_expected,
                if o.oracle_match { "yes" } else { "NO" },
                o.recorded_result,
                if o.recorded_agrees { "yes" } else { "diverges" },
                o.w_max,
                o.margin,
                if o.fired_exclusions.is_empty() {
                    "-".to_string()
                } else {
                    o.fired_exclusions.join(",")
                }
            );
        }
        s
    }
}

pub fn run_golden_cases(cases: &[GoldenCase], kb: &KnowledgeBase) -> Result<GoldenReport, KnowledgeError> {
    let mut outcomes = Vec::with_capacity(cases.len());
    for case in cases {
        let r = classify(&case.labels, kb)?;
        outcomes.push(GoldenOutcome {
            case_id: case.case_id,
            oracle_match: r.label == case.oracle_expected,
            recorded_agrees: case.recorded_agrees(&r.label),
            oracle_expected: case.oracle_expected.clone(),
            recorded_result: case.recorded_result.clone(),
            w_max: r.w_max,
            margin: r.margin,
            fired_exclusions: r.fired_exclusions.iter().map(|e| e.species.clone()).collect(),
            label: r.label,
        });
    }
    Ok(GoldenReport {
        fixture_version: GOLDEN_FIXTURE_VERSION,
        oracle_matches: outcomes.iter().filter(|o| o.oracle_match).count(),
        recorded_agreements: outcomes.iter().filter(|o| o.recorded_agrees).count(),
        total: outcomes.len(),
        outcomes,
    })
}

/// Runs the fixture shipped with the crate.
pub fn run_golden_suite(kb: &KnowledgeBase) -> Result<GoldenReport, EvalError> {
    let cases = parse_golden_fixture(FIXTURE)?;
    run_golden_cases(&cases, kb).map_err(|e| corrupt(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::default_knowledge_base;

    #[test]
    fn embedded_fixture_parses() {
        let cases = parse_golden_fixture(FIXTURE).unwrap();
        assert_eq!(cases.len(), 30);
        assert_eq!(cases[24].case_id, 25);
        assert_eq!(cases[24].oracle_expected, RockLabel::Rock("Limestone".into()));
    }

    #[test]
    fn tampering_is_detected() {
        let tampered = FIXTURE.replacen("Calcite", "Dolomite", 1);
        assert!(matches!(parse_golden_fixture(&tampered), Err(EvalError::FixtureCorrupt(m)) if m.contains("checksum")));
        assert!(matches!(
            load_golden_fixture(Path::new("/nonexistent/golden.tsv")),
            Err(EvalError::FixtureMissing(_))
        ));
    }

    #[test]
    fn selected_cases() {
        let report = run_golden_suite(&default_knowledge_base()).unwrap();
        let case = |id: u32| report.outcomes.iter().find(|o| o.case_id == id).unwrap();
        assert_eq!(case(25).label.as_str(), "Limestone");
        assert!(case(25).oracle_match && case(25).recorded_agrees);
        assert!(case(24).label.is_other());
        assert!(case(24).recorded_agrees);
        assert_eq!(case(24).fired_exclusions, vec!["epidote".to_string()]);
    }
}
