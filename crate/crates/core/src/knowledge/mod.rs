//! Weighted rule-based rock classification from mineral label sequences.
//!
//! A rock's weight is the sum of its assemblage weights whose group
//! proportion lies inside the assemblage's composition range (bounds
//! inclusive). The heaviest rock is reported only if its weight clears the
//! confidence threshold, beats the runner-up by the dominance threshold and no
//! exclusion rule for it fires; otherwise the sample is "other".

mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{load_knowledge_base, parse_knowledge_base, KnowledgeBaseConfig};

/// Slack for threshold and range comparisons. Proportions and weight sums
/// are computed in binary floating point, so `0.6 - 0.3` must still count as
/// clearing a dominance threshold of `0.3`.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnowledgeError {
    #[error("no measurements to classify")]
    EmptyMeasurements,
    #[error("unknown constraint function kind {0:?}")]
    UnknownFunctionKind(String),
    #[error("invalid knowledge base at {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot parse knowledge base: {0}")]
    Parse(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> KnowledgeError {
    KnowledgeError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// Species names are matched case-insensitively with surrounding space ignored.
pub fn normalize_species(name: &str) -> String {
    name.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineralGroup {
    pub name: String,
    pub members: BTreeSet<String>,
    /// Set when this group may share species with other groups.
    #[serde(default)]
    pub overlapping: bool,
}

impl MineralGroup {
    pub fn new(name: &str, members: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            members: members.iter().map(|m| normalize_species(m)).collect(),
            overlapping: false,
        }
    }

    pub fn contains(&self, species: &str) -> bool {
        self.members.contains(&normalize_species(species))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAssemblage {
    pub group: MineralGroup,
    pub weight: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl WeightedAssemblage {
    pub fn new(group: MineralGroup, weight: f64, p_min: f64, p_max: f64) -> Self {
        Self {
            group,
            weight,
            p_min,
            p_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    CountAtLeast,
    ProportionInRange,
}

impl FunctionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CountAtLeast => "count-at-least",
            Self::ProportionInRange => "proportion-in-range",
        }
    }
}

impl FromStr for FunctionKind {
    type Err = KnowledgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "count-at-least" => Ok(Self::CountAtLeast),
            "proportion-in-range" => Ok(Self::ProportionInRange),
            other => Err(KnowledgeError::UnknownFunctionKind(other.to_string())),
        }
    }
}

/// Extra condition on a rule: either at least `threshold` measurements from
/// the group, or the group proportion within `[parameters[0], parameters[1]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub group: MineralGroup,
    pub function_kind: FunctionKind,
    pub parameters: Vec<f64>,
    pub threshold: f64,
}

impl ConstraintSpec {
    pub fn count_at_least(group: MineralGroup, threshold: f64) -> Self {
        Self {
            group,
            function_kind: FunctionKind::CountAtLeast,
            parameters: Vec::new(),
            threshold,
        }
    }

    pub fn proportion_in_range(group: MineralGroup, lo: f64, hi: f64) -> Self {
        Self {
            group,
            function_kind: FunctionKind::ProportionInRange,
            parameters: vec![lo, hi],
            threshold: 0.0,
        }
    }

    fn validate(&self, path: &str) -> Result<(), KnowledgeError> {
        if !self.threshold.is_finite() {
            return Err(invalid(format!("{path}.threshold"), "must be finite"));
        }
        if self.function_kind == FunctionKind::ProportionInRange {
            match self.parameters.as_slice() {
                [lo, hi] if lo.is_finite() && hi.is_finite() && lo <= hi => {}
                _ => return Err(invalid(format!("{path}.parameters"), "proportion-in-range needs [lo, hi] with lo <= hi")),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RockRule {
    pub rock_name: String,
    pub assemblages: Vec<WeightedAssemblage>,
    pub constraints: Vec<ConstraintSpec>,
    /// Index of this rock's root in [`KnowledgeBase::hierarchy`]; assigned by
    /// [`KnowledgeBase::new`].
    pub hierarchy_node: usize,
}

impl RockRule {
    pub fn new(rock_name: &str, assemblages: Vec<WeightedAssemblage>) -> Self {
        Self {
            rock_name: rock_name.to_string(),
            assemblages,
            constraints: Vec::new(),
            hierarchy_node: 0,
        }
    }

    pub fn max_weight(&self) -> f64 {
        self.assemblages.iter().map(|a| a.weight).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Rock,
    Group,
    Species,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    pub weight: f64,
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub name: String,
    pub kind: NodeKind,
    pub parent: Option<usize>,
    /// Composition parameters, present on group nodes.
    pub params: Option<NodeParams>,
}

/// Forest of rock → group → species trees, one tree per rule. Built from the
/// rules, so it is acyclic and every species leaf hangs off exactly one group
/// node of its rock.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub nodes: Vec<HierarchyNode>,
}

impl Hierarchy {
    fn push(&mut self, name: &str, kind: NodeKind, parent: Option<usize>, params: Option<NodeParams>) -> usize {
        self.nodes.push(HierarchyNode {
            name: name.to_string(),
            kind,
            parent,
            params,
        });
        self.nodes.len() - 1
    }

    fn add_rule(&mut self, rule: &RockRule) -> usize {
        let root = self.push(&rule.rock_name, NodeKind::Rock, None, None);
        for a in &rule.assemblages {
            let params = NodeParams {
                weight: a.weight,
                p_min: a.p_min,
                p_max: a.p_max,
            };
            let g = self.push(&a.group.name, NodeKind::Group, Some(root), Some(params));
            for species in &a.group.members {
                self.push(species, NodeKind::Species, Some(g), None);
            }
        }
        root
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.parent.map(|p| (p, i)))
            .collect()
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.parent == Some(node))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn roots(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.parent.is_none())
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    MetamorphicIndicator,
    MagmaticIndicator,
}

/// Veto: if `species` occurs in a sample, none of `applies_to` may be the
/// reported rock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRule {
    pub species: String,
    pub reason: ExclusionReason,
    pub applies_to: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// θ_c: minimum winning weight.
    pub confidence: f64,
    /// θ_d: minimum margin over the runner-up.
    pub dominance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            confidence: 0.7,
            dominance: 0.3,
        }
    }
}

/// Validated, immutable knowledge base.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnowledgeBase {
    groups: Vec<MineralGroup>,
    rules: Vec<RockRule>,
    hierarchy: Hierarchy,
    thresholds: Thresholds,
    exclusions: Vec<ExclusionRule>,
}

impl KnowledgeBase {
    pub fn new(
        groups: Vec<MineralGroup>,
        mut rules: Vec<RockRule>,
        thresholds: Thresholds,
        exclusions: Vec<ExclusionRule>,
    ) -> Result<Self, KnowledgeError> {
        validate(&groups, &rules, thresholds, &exclusions)?;
        let mut hierarchy = Hierarchy::default();
        for rule in &mut rules {
            rule.hierarchy_node = hierarchy.add_rule(rule);
        }
        Ok(Self {
            groups,
            rules,
            hierarchy,
            thresholds,
            exclusions,
        })
    }

    pub fn groups(&self) -> &[MineralGroup] {
        &self.groups
    }

    pub fn group(&self, name: &str) -> Option<&MineralGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn rules(&self) -> &[RockRule] {
        &self.rules
    }

    pub fn rule(&self, rock: &str) -> Option<&RockRule> {
        self.rules.iter().find(|r| r.rock_name == rock)
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn exclusions(&self) -> &[ExclusionRule] {
        &self.exclusions
    }

    /// Same knowledge base with different thresholds.
    pub fn with_thresholds(&self, thresholds: Thresholds) -> Result<Self, KnowledgeError> {
        validate_thresholds(thresholds)?;
        Ok(Self {
            thresholds,
            ..self.clone()
        })
    }
}

fn validate_thresholds(t: Thresholds) -> Result<(), KnowledgeError> {
    if !(t.confidence > 0.0 && t.confidence <= 1.0) {
        return Err(invalid("confidence_threshold", "must lie in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&t.dominance) {
        return Err(invalid("dominance_threshold", "must lie in [0, 1]"));
    }
    Ok(())
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn validate(
    groups: &[MineralGroup],
    rules: &[RockRule],
    thresholds: Thresholds,
    exclusions: &[ExclusionRule],
) -> Result<(), KnowledgeError> {
    validate_thresholds(thresholds)?;
    for (i, g) in groups.iter().enumerate() {
        let path = format!("groups[{i}]");
        if g.name.trim().is_empty() {
            return Err(invalid(format!("{path}.name"), "empty group name"));
        }
        if g.members.is_empty() {
            return Err(invalid(format!("{path}.members"), "group has no members"));
        }
        if groups[..i].iter().any(|h| h.name == g.name) {
            return Err(invalid(format!("{path}.name"), format!("duplicate group {:?}", g.name)));
        }
        for (j, h) in groups[..i].iter().enumerate() {
            if g.overlapping || h.overlapping {
                continue;
            }
            if let Some(shared) = g.members.intersection(&h.members).next() {
                return Err(invalid(
                    format!("{path}.members"),
                    format!("{shared:?} is also in groups[{j}] ({}); flag one group as overlapping", h.name),
                ));
            }
        }
    }
    for (i, rule) in rules.iter().enumerate() {
        let path = format!("rules[{i}]");
        if rule.rock_name.trim().is_empty() {
            return Err(invalid(format!("{path}.rock_name"), "empty rock name"));
        }
        if rules[..i].iter().any(|r| r.rock_name == rule.rock_name) {
            return Err(invalid(format!("{path}.rock_name"), format!("duplicate rock {:?}", rule.rock_name)));
        }
        if rule.rock_name == OTHER_LABEL {
            return Err(invalid(format!("{path}.rock_name"), "\"other\" is reserved"));
        }
        if rule.assemblages.is_empty() {
            return Err(invalid(format!("{path}.assemblages"), "rule has no assemblages"));
        }
        for (j, a) in rule.assemblages.iter().enumerate() {
            let apath = format!("{path}.assemblages[{j}]");
            match groups.iter().find(|g| g.name == a.group.name) {
                None => return Err(invalid(format!("{apath}.group"), format!("unknown group {:?}", a.group.name))),
                Some(g) if g != &a.group => {
                    return Err(invalid(format!("{apath}.group"), "members differ from the declared group"))
                }
                Some(_) => {}
            }
            if !unit(a.weight) {
                return Err(invalid(format!("{apath}.weight"), "must lie in [0, 1]"));
            }
            if !unit(a.p_min) || !unit(a.p_max) {
                return Err(invalid(format!("{apath}.range"), "bounds must lie in [0, 1]"));
            }
            if a.p_min > a.p_max {
                return Err(invalid(format!("{apath}.range"), "p_min exceeds p_max"));
            }
        }
        for (j, c) in rule.constraints.iter().enumerate() {
            let cpath = format!("{path}.constraints[{j}]");
            if !groups.iter().any(|g| g == &c.group) {
                return Err(invalid(format!("{cpath}.group"), format!("unknown group {:?}", c.group.name)));
            }
            c.validate(&cpath)?;
        }
    }
    for (i, e) in exclusions.iter().enumerate() {
        let path = format!("exclusions[{i}]");
        if e.species.trim().is_empty() {
            return Err(invalid(format!("{path}.species"), "empty species"));
        }
        if let Some(rock) = e.applies_to.iter().find(|r| !rules.iter().any(|rule| &rule.rock_name == *r)) {
            return Err(invalid(format!("{path}.applies_to"), format!("unknown rock {rock:?}")));
        }
    }
    Ok(())
}

pub const OTHER_LABEL: &str = "other";

/// Outcome label: a rock name or "other".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum RockLabel {
    Rock(String),
    Other,
}

impl RockLabel {
    pub fn as_str(&self) -> &str {
        match self {
            Self::Rock(name) => name,
            Self::Other => OTHER_LABEL,
        }
    }

    pub fn is_other(&self) -> bool {
        matches!(self, Self::Other)
    }
}

impl fmt::Display for RockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<String> for RockLabel {
    fn from(s: String) -> Self {
        if s == OTHER_LABEL {
            Self::Other
        } else {
            Self::Rock(s)
        }
    }
}

impl From<RockLabel> for String {
    fn from(l: RockLabel) -> Self {
        l.as_str().to_string()
    }
}

/// One assemblage's contribution to one rock weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub rock: String,
    pub group: String,
    pub weight: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub proportion: f64,
    pub delta: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RockClassification {
    pub weights: BTreeMap<String, f64>,
    pub w_max: f64,
    pub w_second: f64,
    pub margin: f64,
    pub label: RockLabel,
    /// Unique heaviest rock, if any; the label falls back to "other" when
    /// it misses a threshold or is vetoed.
    pub candidate: Option<String>,
    pub fired_exclusions: Vec<ExclusionRule>,
    pub proportions: BTreeMap<String, f64>,
    pub trace: Vec<TraceEntry>,
}

/// Group proportions over all measurements. Labels outside every group,
/// UNKNOWN included, still count in the denominator.
pub fn mineral_proportions<S: AsRef<str>>(
    measurements: &[S],
    kb: &KnowledgeBase,
) -> Result<BTreeMap<String, f64>, KnowledgeError> {
    if measurements.is_empty() {
        return Err(KnowledgeError::EmptyMeasurements);
    }
    let normalized: Vec<String> = measurements.iter().map(|m| normalize_species(m.as_ref())).collect();
    let n = normalized.len() as f64;
    Ok(kb
        .groups
        .iter()
        .map(|g| {
            let count = normalized.iter().filter(|m| g.members.contains(*m)).count();
            (g.name.clone(), count as f64 / n)
        })
        .collect())
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo - TOLERANCE && x <= hi + TOLERANCE
}

/// δ: whether `proportion` lies in the assemblage's inclusive range.
pub fn indicator(proportion: f64, assemblage: &WeightedAssemblage) -> bool {
    in_range(proportion, assemblage.p_min, assemblage.p_max)
}

fn group_proportion(proportions: &BTreeMap<String, f64>, group: &str) -> f64 {
    proportions.get(group).copied().unwrap_or(0.0)
}

/// Sum of assemblage weights whose range holds. Groups missing from
/// `proportions` count as proportion 0.
pub fn rock_weight(proportions: &BTreeMap<String, f64>, rule: &RockRule) -> f64 {
    rule.assemblages
        .iter()
        .filter(|a| indicator(group_proportion(proportions, &a.group.name), a))
        .map(|a| a.weight)
        .sum()
}

/// Weighted membership of a single species in one assemblage.
pub fn membership(mineral: &str, assemblage: &WeightedAssemblage, proportions: &BTreeMap<String, f64>) -> f64 {
    if assemblage.group.contains(mineral) && indicator(group_proportion(proportions, &assemblage.group.name), assemblage)
    {
        assemblage.weight
    } else {
        0.0
    }
}

fn group_count<S: AsRef<str>>(measurements: &[S], group: &MineralGroup) -> usize {
    measurements.iter().filter(|m| group.contains(m.as_ref())).count()
}

pub fn evaluate_constraint<S: AsRef<str>>(measurements: &[S], spec: &ConstraintSpec) -> bool {
    let count = group_count(measurements, &spec.group);
    match spec.function_kind {
        FunctionKind::CountAtLeast => count as f64 >= spec.threshold - TOLERANCE,
        FunctionKind::ProportionInRange => {
            let f = if measurements.is_empty() {
                0.0
            } else {
                count as f64 / measurements.len() as f64
            };
            match spec.parameters.as_slice() {
                [lo, hi, ..] => in_range(f, *lo, *hi),
                _ => false,
            }
        }
    }
}

/// All of the rule's constraints hold and it wins under both thresholds.
/// Exclusions are not part of this predicate.
pub fn rule_fires<S: AsRef<str>>(measurements: &[S], rule: &RockRule, kb: &KnowledgeBase) -> bool {
    if !rule.constraints.iter().all(|c| evaluate_constraint(measurements, c)) {
        return false;
    }
    let Ok(proportions) = mineral_proportions(measurements, kb) else {
        return false;
    };
    let own = rock_weight(&proportions, rule);
    let best_other = kb
        .rules
        .iter()
        .filter(|r| r.rock_name != rule.rock_name)
        .map(|r| rock_weight(&proportions, r))
        .fold(0.0, f64::max);
    clears(own, best_other, kb.thresholds)
}

fn clears(w_max: f64, w_second: f64, t: Thresholds) -> bool {
    w_max >= t.confidence - TOLERANCE && w_max - w_second >= t.dominance - TOLERANCE
}

/// Product over assemblages of `weight^count * δ`, where `count` is the
/// number of measurements in the assemblage's group. Exposed for
/// inspection; classification uses the additive weight.
pub fn assemblage_probability<S: AsRef<str>>(measurements: &[S], rule: &RockRule) -> f64 {
    let n = measurements.len();
    let mut p = 1.0;
    for a in &rule.assemblages {
        let count = group_count(measurements, &a.group);
        let f = if n == 0 { 0.0 } else { count as f64 / n as f64 };
        if !indicator(f, a) {
            return 0.0;
        }
        p *= a.weight.powi(count as i32);
    }
    p
}

/// Exclusions applicable to `candidate_rock` whose species occurs in the sample.
pub fn check_exclusions<S: AsRef<str>>(measurements: &[S], kb: &KnowledgeBase, candidate_rock: &str) -> Vec<ExclusionRule> {
    let present: BTreeSet<String> = measurements.iter().map(|m| normalize_species(m.as_ref())).collect();
    let mut fired: Vec<ExclusionRule> = kb
        .exclusions
        .iter()
        .filter(|e| e.applies_to.contains(candidate_rock) && present.contains(&normalize_species(&e.species)))
        .cloned()
        .collect();
    fired.sort_by(|a, b| a.species.cmp(&b.species));
    fired
}

pub fn classify<S: AsRef<str>>(measurements: &[S], kb: &KnowledgeBase) -> Result<RockClassification, KnowledgeError> {
    let proportions = mineral_proportions(measurements, kb)?;
    let mut weights = BTreeMap::new();
    let mut trace = Vec::new();
    for rule in &kb.rules {
        for a in &rule.assemblages {
            let proportion = group_proportion(&proportions, &a.group.name);
            trace.push(TraceEntry {
                rock: rule.rock_name.clone(),
                group: a.group.name.clone(),
                weight: a.weight,
                p_min: a.p_min,
                p_max: a.p_max,
                proportion,
                delta: indicator(proportion, a),
            });
        }
        weights.insert(rule.rock_name.clone(), rock_weight(&proportions, rule));
    }

    let mut sorted: Vec<f64> = weights.values().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let w_max = sorted.first().copied().unwrap_or(0.0);
    let w_second = sorted.get(1).copied().unwrap_or(0.0);
    let margin = w_max - w_second;

    let top: Vec<&String> = weights.iter().filter(|(_, &w)| w == w_max).map(|(r, _)| r).collect();
    let candidate = match top.as_slice() {
        [only] => Some((*only).clone()),
        _ => None,
    };
    let mut fired_exclusions = Vec::new();
    let mut label = RockLabel::Other;
    if let Some(rock) = &candidate {
        fired_exclusions = check_exclusions(measurements, kb, rock);
        let rule = kb.rule(rock).expect("candidate comes from the rule list");
        let constraints_hold = rule.constraints.iter().all(|c| evaluate_constraint(measurements, c));
        if clears(w_max, w_second, kb.thresholds) && fired_exclusions.is_empty() && constraints_hold {
            label = RockLabel::Rock(rock.clone());
        }
    }

    Ok(RockClassification {
        weights,
        w_max,
        w_second,
        margin,
        label,
        candidate,
        fired_exclusions,
        proportions,
        trace,
    })
}

pub fn default_knowledge_base() -> KnowledgeBase {
    let feldspars = MineralGroup::new("feldspars", &["albite", "anorthite", "orthoclase"]);
    let quartz = MineralGroup::new("quartz", &["quartz"]);
    let micas = MineralGroup::new("micas", &["annite", "muscovite", "phlogopite"]);
    let calcite = MineralGroup::new("calcite", &["calcite"]);
    let dolomite = MineralGroup::new("dolomite", &["dolomite"]);
    let a = WeightedAssemblage::new;
    let rules = vec![
        RockRule::new(
            "Granite",
            vec![
                a(feldspars.clone(), 0.8, 0.45, 0.80),
                a(quartz.clone(), 0.6, 0.20, 0.40),
                a(micas.clone(), 0.3, 0.0, 0.15),
            ],
        ),
        RockRule::new(
            "Sandstone",
            vec![
                a(quartz.clone(), 0.9, 0.70, 1.00),
                a(feldspars.clone(), 0.5, 0.05, 0.25),
                a(micas.clone(), 0.2, 0.02, 0.03),
            ],
        ),
        RockRule::new(
            "Limestone",
            vec![
                a(calcite.clone(), 0.9, 0.90, 1.00),
                a(dolomite.clone(), 0.7, 0.10, 0.50),
                a(quartz.clone(), 0.2, 0.0, 0.10),
            ],
        ),
    ];
    let all: BTreeSet<String> = rules.iter().map(|r| r.rock_name.clone()).collect();
    let mut exclusions: Vec<ExclusionRule> = [
        "jadeite",
        "omphacite",
        "glaucophane",
        "staurolite",
        "almandine",
        "garnet",
        "pyrope",
        "andalusite",
        "kyanite",
        "epidote",
    ]
    .iter()
    .map(|s| ExclusionRule {
        species: s.to_string(),
        reason: ExclusionReason::MetamorphicIndicator,
        applies_to: all.clone(),
    })
    .collect();
    exclusions.push(ExclusionRule {
        species: "sanidine".into(),
        reason: ExclusionReason::MagmaticIndicator,
        applies_to: ["Sandstone", "Limestone"].iter().map(|s| s.to_string()).collect(),
    });
    KnowledgeBase::new(
        vec![feldspars, quartz, micas, calcite, dolomite],
        rules,
        Thresholds::default(),
        exclusions,
    )
    .expect("default knowledge base is valid")
}
