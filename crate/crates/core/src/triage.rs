//! Failure triage: classifies failed test cases into the dependency
//! (RQ3-style) and incompatibility (RQ4-style) taxonomies with an
//! ordered, bounded rule set, plus seeded sampling for manual-analysis
//! workflows.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::classify_statement;

/// Which taxonomy a category belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taxonomy {
    /// Dependency reasons observed when running a suite on its donor.
    Rq3,
    /// Incompatibility reasons observed when running across hosts.
    Rq4,
}

pub const RQ3_LABELS: &[&str] = &[
    "env-file-paths",
    "env-setting",
    "env-setup",
    "extension",
    "client-format",
    "client-numeric",
    "client-exception",
    "runner",
];

pub const RQ4_LABELS: &[&str] = &[
    "statements",
    "functions",
    "types",
    "operators",
    "configurations",
    "semantic",
    "misc",
    "timeout",
    "crash",
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FailureCategory {
    pub taxonomy: Taxonomy,
    pub label: String,
}

impl FailureCategory {
    pub fn new(taxonomy: Taxonomy, label: &str) -> Result<Self, RulesetError> {
        let valid = match taxonomy {
            Taxonomy::Rq3 => RQ3_LABELS.contains(&label),
            Taxonomy::Rq4 => RQ4_LABELS.contains(&label),
        };
        if valid {
            Ok(FailureCategory {
                taxonomy,
                label: label.to_string(),
            })
        } else {
            Err(RulesetError::UnknownLabel {
                taxonomy,
                label: label.to_string(),
            })
        }
    }
}

/// How a record failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// Execution status differed from the expectation (error vs ok).
    StatusMismatch,
    /// Both sides executed but the results differ.
    ResultMismatch,
    Crash,
    Timeout,
}

/// One failed test case, carrying everything a triage rule can match on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub suite: String,
    pub host: String,
    pub script_path: String,
    pub line: u32,
    pub sql: String,
    /// Summary of the expectation (expected error/result line).
    pub expected: String,
    /// Engine error message for status mismatches, first divergent line
    /// for result mismatches; empty for crash and timeout records.
    pub actual: String,
    pub kind: FailureKind,
}

impl FailureRecord {
    pub fn crash_or_timeout(mut self) -> Self {
        self.actual = String::new();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MismatchKind {
    Status,
    Result,
}

/// One declarative pattern -> category rule. All present matchers must
/// hold for the rule to fire.
#[derive(Debug, Clone)]
pub struct TriageRule {
    pub id: String,
    pub taxonomy: Taxonomy,
    pub category: FailureCategory,
    pub note: String,
    /// Optional (suite, host) scope; None matches every pair.
    pub suite: Option<String>,
    pub host: Option<String>,
    pub statement_type: Option<String>,
    pub sql_contains: Option<String>,
    pub sql_regex: Option<Regex>,
    pub error_contains: Option<String>,
    pub error_regex: Option<Regex>,
    pub mismatch: Option<MismatchKind>,
}

impl TriageRule {
    fn matches(&self, record: &FailureRecord) -> bool {
        if let Some(suite) = &self.suite {
            if suite != &record.suite {
                return false;
            }
        }
        if let Some(host) = &self.host {
            if host != &record.host {
                return false;
            }
        }
        if let Some(kind) = self.mismatch {
            let got = match record.kind {
                FailureKind::StatusMismatch => MismatchKind::Status,
                FailureKind::ResultMismatch => MismatchKind::Result,
                _ => return false,
            };
            if got != kind {
                return false;
            }
        }
        if let Some(ty) = &self.statement_type {
            if classify_statement(&record.sql).name() != ty {
                return false;
            }
        }
        if let Some(sub) = &self.sql_contains {
            if !record.sql.contains(sub.as_str()) {
                return false;
            }
        }
        if let Some(re) = &self.sql_regex {
            if !re.is_match(&record.sql) {
                return false;
            }
        }
        // Error matchers inspect the engine message, which only status
        // mismatches carry.
        if self.error_contains.is_some() || self.error_regex.is_some() {
            if record.kind != FailureKind::StatusMismatch {
                return false;
            }
            if let Some(sub) = &self.error_contains {
                if !record.actual.contains(sub.as_str()) {
                    return false;
                }
            }
            if let Some(re) = &self.error_regex {
                if !re.is_match(&record.actual) {
                    return false;
                }
            }
        }
        true
    }
}

pub const DEFAULT_RULE_LIMIT: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RulesetError {
    #[error("ruleset is not valid TOML: {0}")]
    Toml(String),
    #[error("rule {id}: invalid regex {field}: {message}")]
    Regex {
        id: String,
        field: &'static str,
        message: String,
    },
    #[error("label {label:?} is not in the {taxonomy:?} taxonomy")]
    UnknownLabel { taxonomy: Taxonomy, label: String },
    #[error("rule {id}: category {label:?} requires mismatch = \"result\" (status mismatches are never semantic)")]
    SemanticNeedsResult { id: String, label: String },
    #[error("{count} rules for pair {pair:?} exceed the limit of {limit}")]
    TooManyRules {
        pair: String,
        count: usize,
        limit: usize,
    },
    #[error("rule {id}: {message}")]
    Invalid { id: String, message: String },
}

#[derive(Debug, Deserialize)]
struct RulesetFile {
    #[serde(default)]
    version: Option<u32>,
    #[serde(default)]
    rule_limit: Option<usize>,
    #[serde(default, rename = "rules")]
    rules: Vec<RuleEntry>,
}

#[derive(Debug, Deserialize)]
struct RuleEntry {
    id: String,
    taxonomy: String,
    category: String,
    #[serde(default)]
    note: String,
    #[serde(default)]
    suite: Option<String>,
    #[serde(default)]
    host: Option<String>,
    #[serde(default)]
    statement_type: Option<String>,
    #[serde(default)]
    sql_contains: Option<String>,
    #[serde(default)]
    sql_regex: Option<String>,
    #[serde(default)]
    error_contains: Option<String>,
    #[serde(default)]
    error_regex: Option<String>,
    #[serde(default)]
    mismatch: Option<String>,
}

/// A validated, ordered, bounded rule set.
#[derive(Debug, Clone)]
pub struct Ruleset {
    pub version: u32,
    pub rules: Vec<TriageRule>,
    pub limit: usize,
}

impl Ruleset {
    pub fn empty() -> Self {
        Ruleset {
            version: 1,
            rules: Vec::new(),
            limit: DEFAULT_RULE_LIMIT,
        }
    }
}

pub fn load_ruleset(text: &str) -> Result<Ruleset, RulesetError> {
    load_ruleset_with_limit(text, None)
}

/// Parses and validates a ruleset. Rules stay in file order; the
/// per-(suite, host) count, with unscoped rules counting toward every
/// pair they can fire on, must stay within the limit.
pub fn load_ruleset_with_limit(
    text: &str,
    limit_override: Option<usize>,
) -> Result<Ruleset, RulesetError> {
    let file: RulesetFile = toml::from_str(text).map_err(|e| RulesetError::Toml(e.to_string()))?;
    let limit = limit_override
        .or(file.rule_limit)
        .unwrap_or(DEFAULT_RULE_LIMIT);

    let mut rules = Vec::with_capacity(file.rules.len());
    for entry in file.rules {
        rules.push(build_rule(entry)?);
    }

    // Bound check per concrete (suite, host) pair; global rules count
    // toward every pair that appears.
    let mut global = 0usize;
    let mut per_pair: BTreeMap<(String, String), usize> = BTreeMap::new();
    for rule in &rules {
        match (&rule.suite, &rule.host) {
            (Some(s), Some(h)) => *per_pair.entry((s.clone(), h.clone())).or_insert(0) += 1,
            _ => global += 1,
        }
    }
    let worst = per_pair
        .iter()
        .map(|((s, h), n)| (format!("{s}x{h}"), n + global))
        .chain(std::iter::once(("*x*".to_string(), global)))
        .max_by_key(|(_, n)| *n)
        .unwrap_or(("*x*".to_string(), 0));
    if worst.1 > limit {
        return Err(RulesetError::TooManyRules {
            pair: worst.0,
            count: worst.1,
            limit,
        });
    }

    Ok(Ruleset {
        version: file.version.unwrap_or(1),
        rules,
        limit,
    })
}

fn build_rule(entry: RuleEntry) -> Result<TriageRule, RulesetError> {
    let taxonomy = match entry.taxonomy.to_ascii_lowercase().as_str() {
        "rq3" => Taxonomy::Rq3,
        "rq4" => Taxonomy::Rq4,
        other => {
            return Err(RulesetError::Invalid {
                id: entry.id,
                message: format!("unknown taxonomy {other:?} (want rq3 or rq4)"),
            })
        }
    };
    let category = FailureCategory::new(taxonomy, &entry.category)?;
    let mismatch = match entry.mismatch.as_deref() {
        None => None,
        Some("status") => Some(MismatchKind::Status),
        Some("result") => Some(MismatchKind::Result),
        Some(other) => {
            return Err(RulesetError::Invalid {
                id: entry.id,
                message: format!("unknown mismatch kind {other:?} (want status or result)"),
            })
        }
    };
    if category.label == "semantic" && mismatch != Some(MismatchKind::Result) {
        return Err(RulesetError::SemanticNeedsResult {
            id: entry.id,
            label: category.label,
        });
    }
    let compile = |field: &'static str, src: &Option<String>| -> Result<Option<Regex>, RulesetError> {
        src.as_deref()
            .map(|s| {
                Regex::new(s).map_err(|e| RulesetError::Regex {
                    id: entry.id.clone(),
                    field,
                    message: e.to_string(),
                })
            })
            .transpose()
    };
    let sql_regex = compile("sql_regex", &entry.sql_regex)?;
    let error_regex = compile("error_regex", &entry.error_regex)?;
    Ok(TriageRule {
        id: entry.id,
        taxonomy,
        category,
        note: entry.note,
        suite: entry.suite,
        host: entry.host,
        statement_type: entry.statement_type,
        sql_contains: entry.sql_contains,
        sql_regex,
        error_contains: entry.error_contains,
        error_regex,
        mismatch,
    })
}

/// First matching rule wins; crash and timeout outcomes bypass the rules
/// entirely. `None` means unclassified residue.
pub fn classify_failure(record: &FailureRecord, rules: &[TriageRule]) -> Option<FailureCategory> {
    match record.kind {
        FailureKind::Crash => {
            return Some(FailureCategory {
                taxonomy: Taxonomy::Rq4,
                label: "crash".into(),
            })
        }
        FailureKind::Timeout => {
            return Some(FailureCategory {
                taxonomy: Taxonomy::Rq4,
                label: "timeout".into(),
            })
        }
        _ => {}
    }
    rules
        .iter()
        .find(|rule| rule.matches(record))
        .map(|rule| rule.category.clone())
}

/// Uniform sample without replacement; deterministic under
/// (seed, input order). Returns everything when `n >= len`.
pub fn sample_failures(failures: &[FailureRecord], n: usize, seed: u64) -> Vec<FailureRecord> {
    if n >= failures.len() {
        return failures.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..failures.len()).collect();
    // Partial Fisher-Yates: the first n slots end up a uniform sample.
    for i in 0..n {
        let j = i + (rng.next_u64() as usize) % (indices.len() - i);
        indices.swap(i, j);
    }
    indices[..n].iter().map(|&i| failures[i].clone()).collect()
}

/// The stopping-condition inputs of the iterate-until-covered loop:
/// fraction classified plus the residue for the analyst's next rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub classified_fraction: f64,
    pub unclassified: Vec<FailureRecord>,
}

pub fn rule_coverage(failures: &[FailureRecord], rules: &[TriageRule]) -> CoverageReport {
    let mut unclassified = Vec::new();
    for record in failures {
        if classify_failure(record, rules).is_none() {
            unclassified.push(record.clone());
        }
    }
    let classified_fraction = if failures.is_empty() {
        1.0
    } else {
        (failures.len() - unclassified.len()) as f64 / failures.len() as f64
    };
    CoverageReport {
        classified_fraction,
        unclassified,
    }
}

/// Category-by-host count table, the shape of the paper-style summary
/// tables. Unclassified records land in a `(unclassified)` row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriageTable {
    pub hosts: Vec<String>,
    pub rows: Vec<TriageRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriageRow {
    pub category: String,
    pub counts: Vec<u64>,
}

pub fn triage_table(failures: &[FailureRecord], rules: &[TriageRule]) -> TriageTable {
    let mut hosts: Vec<String> = failures.iter().map(|f| f.host.clone()).collect();
    hosts.sort();
    hosts.dedup();
    let mut cells: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for record in failures {
        let label = match classify_failure(record, rules) {
            Some(cat) => format!("{:?}/{}", cat.taxonomy, cat.label).to_lowercase(),
            None => "(unclassified)".to_string(),
        };
        *cells
            .entry(label)
            .or_default()
            .entry(record.host.clone())
            .or_insert(0) += 1;
    }
    let rows = cells
        .into_iter()
        .map(|(category, by_host)| TriageRow {
            counts: hosts
                .iter()
                .map(|h| by_host.get(h).copied().unwrap_or(0))
                .collect(),
            category,
        })
        .collect();
    TriageTable { hosts, rows }
}

pub fn triage_table_csv(table: &TriageTable) -> String {
    let mut out = String::from("category");
    for host in &table.hosts {
        out.push(',');
        out.push_str(host);
    }
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.category);
        for count in &row.counts {
            out.push_str(&format!(",{count}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(kind: FailureKind, sql: &str, actual: &str) -> FailureRecord {
        FailureRecord {
            suite: "slt".into(),
            host: "mysql".into(),
            script_path: "x.test".into(),
            line: 1,
            sql: sql.into(),
            expected: "ok".into(),
            actual: actual.into(),
            kind,
        }
    }

    const RULES: &str = r#"
version = 1

[[rules]]
id = "unknown-function"
taxonomy = "rq4"
category = "functions"
error_regex = "no such function|does not exist"
note = "host lacks a donor function"

[[rules]]
id = "unknown-configuration"
taxonomy = "rq4"
category = "configurations"
error_contains = "configuration parameter"
note = "host lacks a donor setting"
"#;

    #[test]
    fn crash_and_timeout_bypass_rules() {
        let rules = load_ruleset(RULES).unwrap();
        let crash = record(FailureKind::Crash, "SELECT 1", "");
        let cat = classify_failure(&crash, &rules.rules).unwrap();
        assert_eq!(cat.label, "crash");
        let hang = record(FailureKind::Timeout, "SELECT 1", "");
        assert_eq!(classify_failure(&hang, &rules.rules).unwrap().label, "timeout");
    }

    #[test]
    fn first_match_wins_and_messages_are_matched() {
        let rules = load_ruleset(RULES).unwrap();
        let rec = record(
            FailureKind::StatusMismatch,
            "SELECT pg_typeof(1)",
            "no such function: pg_typeof",
        );
        assert_eq!(classify_failure(&rec, &rules.rules).unwrap().label, "functions");
        let rec = record(
            FailureKind::StatusMismatch,
            "SET default_null_order='nulls_first'",
            "unrecognized configuration parameter \"default_null_order\"",
        );
        assert_eq!(
            classify_failure(&rec, &rules.rules).unwrap().label,
            "configurations"
        );
    }

    #[test]
    fn error_matchers_never_fire_on_result_mismatches() {
        let rules = load_ruleset(RULES).unwrap();
        let rec = record(FailureKind::ResultMismatch, "SELECT 1", "does not exist");
        assert_eq!(classify_failure(&rec, &rules.rules), None);
    }

    #[test]
    fn semantic_rules_require_result_mismatch() {
        let bad = r#"
[[rules]]
id = "division"
taxonomy = "rq4"
category = "semantic"
sql_contains = "/"
"#;
        assert!(matches!(
            load_ruleset(bad),
            Err(RulesetError::SemanticNeedsResult { .. })
        ));
    }

    #[test]
    fn oversized_ruleset_is_rejected_with_count() {
        let mut text = String::from("version = 1\n");
        for i in 0..16 {
            text.push_str(&format!(
                "[[rules]]\nid = \"r{i}\"\ntaxonomy = \"rq4\"\ncategory = \"statements\"\nsuite = \"slt\"\nhost = \"mysql\"\nsql_contains = \"x{i}\"\n\n"
            ));
        }
        match load_ruleset(&text) {
            Err(RulesetError::TooManyRules { count, limit, .. }) => {
                assert_eq!(count, 16);
                assert_eq!(limit, 15);
            }
            other => panic!("expected TooManyRules, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_rejected() {
        let bad = "[[rules]]\nid = \"x\"\ntaxonomy = \"rq3\"\ncategory = \"statements\"\n";
        assert!(matches!(
            load_ruleset(bad),
            Err(RulesetError::UnknownLabel { .. })
        ));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let failures: Vec<FailureRecord> = (0..50)
            .map(|i| record(FailureKind::StatusMismatch, &format!("SELECT {i}"), "e"))
            .collect();
        let a = sample_failures(&failures, 10, 7);
        let b = sample_failures(&failures, 10, 7);
        assert_eq!(a, b);
        let c = sample_failures(&failures, 10, 8);
        assert_ne!(a, c);
        assert_eq!(sample_failures(&failures, 100, 7).len(), 50);
    }

    #[test]
    fn coverage_counts_direct_mappings() {
        let crashes: Vec<FailureRecord> =
            (0..3).map(|_| record(FailureKind::Crash, "SELECT 1", "")).collect();
        let cov = rule_coverage(&crashes, &[]);
        assert_eq!(cov.classified_fraction, 1.0);
        assert!(cov.unclassified.is_empty());

        let one = vec![record(FailureKind::StatusMismatch, "SELECT 1", "boom")];
        let cov = rule_coverage(&one, &[]);
        assert_eq!(cov.classified_fraction, 0.0);
        assert_eq!(cov.unclassified.len(), 1);
    }
}
