//! TOML form of a knowledge base.
//!
//! ```toml
//! confidence_threshold = 0.7
//! dominance_threshold = 0.3
//!
//! [[group]]
//! name = "quartz"
//! members = ["quartz"]
//!
//! [[rock]]
//! name = "Sandstone"
//! assemblages = [{ group = "quartz", weight = 0.9, range = [0.70, 1.00] }]
//! constraints = [{ group = "quartz", kind = "count-at-least", threshold = 1 }]
//!
//! [[exclusion]]
//! species = "jadeite"
//! reason = "metamorphic-indicator"
//! applies_to = ["Sandstone"]   # omitted: every rock
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    invalid, normalize_species, ConstraintSpec, ExclusionReason, ExclusionRule, FunctionKind, KnowledgeBase,
    KnowledgeError, MineralGroup, RockRule, Thresholds, WeightedAssemblage,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeBaseConfig {
    pub confidence_threshold: f64,
    pub dominance_threshold: f64,
    #[serde(default, rename = "group")]
    pub groups: Vec<GroupEntry>,
    #[serde(default, rename = "rock")]
    pub rocks: Vec<RockEntry>,
    #[serde(default, rename = "exclusion")]
    pub exclusions: Vec<ExclusionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub name: String,
    pub members: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub overlapping: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblageEntry {
    pub group: String,
    pub weight: f64,
    pub range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEntry {
    pub group: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<f64>,
    #[serde(default)]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockEntry {
    pub name: String,
    pub assemblages: Vec<AssemblageEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionEntry {
    pub species: String,
    pub reason: ExclusionReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applies_to: Option<Vec<String>>,
}

impl KnowledgeBaseConfig {
    pub fn from_knowledge_base(kb: &KnowledgeBase) -> Self {
        let all_rocks: Vec<String> = kb.rules().iter().map(|r| r.rock_name.clone()).collect();
        Self {
            confidence_threshold: kb.thresholds().confidence,
            dominance_threshold: kb.thresholds().dominance,
            groups: kb
                .groups()
                .iter()
                .map(|g| GroupEntry {
                    name: g.name.clone(),
                    members: g.members.iter().cloned().collect(),
                    overlapping: g.overlapping,
                })
                .collect(),
            rocks: kb
                .rules()
                .iter()
                .map(|r| RockEntry {
                    name: r.rock_name.clone(),
                    assemblages: r
                        .assemblages
                        .iter()
                        .map(|a| AssemblageEntry {
                            group: a.group.name.clone(),
                            weight: a.weight,
                            range: [a.p_min, a.p_max],
                        })
                        .collect(),
                    constraints: r
                        .constraints
                        .iter()
                        .map(|c| ConstraintEntry {
                            group: c.group.name.clone(),
                            kind: c.function_kind.as_str().to_string(),
                            parameters: c.parameters.clone(),
                            threshold: c.threshold,
                        })
                        .collect(),
                })
                .collect(),
            exclusions: kb
                .exclusions()
                .iter()
                .map(|e| {
                    let applies: Vec<String> = e.applies_to.iter().cloned().collect();
                    let mut sorted_all = all_rocks.clone();
                    sorted_all.sort();
                    ExclusionEntry {
                        species: e.species.clone(),
                        reason: e.reason,
                        applies_to: (applies != sorted_all).then_some(applies),
                    }
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("knowledge base config serialises")
    }

    /// Resolves group references and validates every invariant.
    pub fn build(&self) -> Result<KnowledgeBase, KnowledgeError> {
        let groups: Vec<MineralGroup> = self
            .groups
            .iter()
            .map(|g| MineralGroup {
                name: g.name.clone(),
                members: g.members.iter().map(|m| normalize_species(m)).collect(),
                overlapping: g.overlapping,
            })
            .collect();
        let lookup = |name: &str, path: String| {
            groups
                .iter()
                .find(|g| g.name == name)
                .cloned()
                .ok_or_else(|| invalid(path, format!("unknown group {name:?}")))
        };
        let mut rules = Vec::with_capacity(self.rocks.len());
        for (i, rock) in self.rocks.iter().enumerate() {
            let mut assemblages = Vec::with_capacity(rock.assemblages.len());
            for (j, a) in rock.assemblages.iter().enumerate() {
                let group = lookup(&a.group, format!("rock[{i}].assemblages[{j}].group"))?;
                assemblages.push(WeightedAssemblage::new(group, a.weight, a.range[0], a.range[1]));
            }
            let mut constraints = Vec::with_capacity(rock.constraints.len());
            for (j, c) in rock.constraints.iter().enumerate() {
                let path = format!("rock[{i}].constraints[{j}]");
                let group = lookup(&c.group, format!("{path}.group"))?;
                let function_kind: FunctionKind = c.kind.parse().map_err(|e: KnowledgeError| match e {
                    KnowledgeError::UnknownFunctionKind(k) => {
                        invalid(format!("{path}.kind"), format!("unknown constraint function kind {k:?}"))
                    }
                    other => other,
                })?;
                constraints.push(ConstraintSpec {
                    group,
                    function_kind,
                    parameters: c.parameters.clone(),
                    threshold: c.threshold,
                });
            }
            let mut rule = RockRule::new(&rock.name, assemblages);
            rule.constraints = constraints;
            rules.push(rule);
        }
        let all_rocks: Vec<String> = rules.iter().map(|r| r.rock_name.clone()).collect();
        let exclusions = self
            .exclusions
            .iter()
            .map(|e| ExclusionRule {
                species: normalize_species(&e.species),
                reason: e.reason,
                applies_to: e.applies_to.clone().unwrap_or_else(|| all_rocks.clone()).into_iter().collect(),
            })
            .collect();
        let thresholds = Thresholds {
            confidence: self.confidence_threshold,
            dominance: self.dominance_threshold,
        };
        KnowledgeBase::new(groups, rules, thresholds, exclusions).map_err(rename_paths)
    }
}

/// The validator names rules and exclusions by their in-memory fields;
/// rewrite those paths to the TOML table names.
fn rename_paths(err: KnowledgeError) -> KnowledgeError {
    match err {
        KnowledgeError::Invalid { path, message } => {
            let path = path
                .replacen("groups[", "group[", 1)
                .replacen("rules[", "rock[", 1)
                .replacen("exclusions[", "exclusion[", 1)
                .replace(".rock_name", ".name");
            KnowledgeError::Invalid { path, message }
        }
        other => other,
    }
}

pub fn parse_knowledge_base(text: &str) -> Result<KnowledgeBase, KnowledgeError> {
    let cfg: KnowledgeBaseConfig = toml::from_str(text).map_err(|e| KnowledgeError::Parse(e.to_string()))?;
    cfg.build()
}

pub fn load_knowledge_base(path: &Path) -> Result<KnowledgeBase, KnowledgeError> {
    let text = std::fs::read_to_string(path).map_err(|e| KnowledgeError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_knowledge_base(&text)
}
