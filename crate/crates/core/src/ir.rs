//! Unified intermediate representation for SQL test files.
//!
//! Every supported test format is lowered into a [`TestScript`]: an ordered
//! list of statement, query, and control records plus file-level metadata.
//! Scripts are immutable after construction and can be freely shared or
//! sent between worker threads.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Source format a script was lowered from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatDialect {
    SltSqlite,
    SltDuckdb,
    PgRegression,
}

impl FormatDialect {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormatDialect::SltSqlite => "slt-sqlite",
            FormatDialect::SltDuckdb => "slt-duckdb",
            FormatDialect::PgRegression => "pg-regression",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "slt-sqlite" | "slt" | "sqlite" => Some(FormatDialect::SltSqlite),
            "slt-duckdb" | "duckdb" => Some(FormatDialect::SltDuckdb),
            "pg-regression" | "pg" | "postgresql" => Some(FormatDialect::PgRegression),
            _ => None,
        }
    }
}

impl fmt::Display for FormatDialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One parsed test file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestScript {
    pub source_path: String,
    pub dialect: FormatDialect,
    pub records: Vec<TestRecord>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl TestScript {
    pub fn new(source_path: impl Into<String>, dialect: FormatDialect) -> Self {
        TestScript {
            source_path: source_path.into(),
            dialect,
            records: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Record-level equivalence: same variants, sql, conditions, and
    /// expectations, ignoring line numbers and parser tags.
    pub fn records_equivalent(&self, other: &TestScript) -> bool {
        self.records.len() == other.records.len()
            && self
                .records
                .iter()
                .zip(&other.records)
                .all(|(a, b)| a.equivalent(b))
    }
}

/// One test record: a statement, query, or runner control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<Condition>,
    pub line: u32,
    /// Parser-attached markers such as `unaligned` or `client-var`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

impl TestRecord {
    pub fn new(kind: RecordKind, line: u32) -> Self {
        TestRecord {
            kind,
            conditions: Vec::new(),
            line,
            tags: Vec::new(),
        }
    }

    pub fn equivalent(&self, other: &TestRecord) -> bool {
        self.conditions == other.conditions && self.kind.equivalent(&other.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Statement(StatementRecord),
    Query(QueryRecord),
    Control(ControlRecord),
}

impl RecordKind {
    fn equivalent(&self, other: &RecordKind) -> bool {
        match (self, other) {
            (RecordKind::Statement(a), RecordKind::Statement(b)) => a == b,
            (RecordKind::Query(a), RecordKind::Query(b)) => a == b,
            (RecordKind::Control(a), RecordKind::Control(b)) => a.equivalent(b),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementRecord {
    pub sql: String,
    pub expect: StatementExpect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatementExpect {
    Ok,
    /// Execution must fail; when a message is given it must be a substring
    /// of the engine's error text.
    Error(Option<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub sql: String,
    pub types: TypeString,
    pub sort: SortMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<ExpectedResult>,
}

/// Declared column types of a query result: a sequence over {T, I, R}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeString(pub Vec<ColumnType>);

impl TypeString {
    /// Parses a type string such as `"IIT"`. Returns the offending
    /// character on any letter outside {T, I, R}.
    pub fn parse(s: &str) -> Result<Self, char> {
        let mut cols = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                'T' => cols.push(ColumnType::Text),
                'I' => cols.push(ColumnType::Integer),
                'R' => cols.push(ColumnType::Real),
                other => return Err(other),
            }
        }
        Ok(TypeString(cols))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for TypeString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{}", c.letter())?;
        }
        Ok(())
    }
}

impl Serialize for TypeString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TypeString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        TypeString::parse(&s)
            .map_err(|c| serde::de::Error::custom(format!("invalid type letter {c:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnType {
    Text,
    Integer,
    Real,
}

impl ColumnType {
    pub fn letter(self) -> char {
        match self {
            ColumnType::Text => 'T',
            ColumnType::Integer => 'I',
            ColumnType::Real => 'R',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SortMode {
    NoSort,
    RowSort,
    ValueSort,
}

impl SortMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SortMode::NoSort => "nosort",
            SortMode::RowSort => "rowsort",
            SortMode::ValueSort => "valuesort",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nosort" => Some(SortMode::NoSort),
            "rowsort" => Some(SortMode::RowSort),
            "valuesort" => Some(SortMode::ValueSort),
            _ => None,
        }
    }
}

/// Expected result of a query record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedResult {
    /// One rendered value per line, row-major.
    Values(Vec<String>),
    /// One row per line, values tab-separated.
    Rows(Vec<String>),
    /// Count plus hash replacing a long value-wise block.
    Digest { value_count: u64, hash: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlRecord {
    Halt,
    SkipIf(String),
    OnlyIf(String),
    HashThreshold(u32),
    Loop {
        var: String,
        start: i64,
        end: i64,
        body: Vec<TestRecord>,
    },
    Require(String),
    SetVariable {
        name: String,
        value: String,
    },
    Load(String),
    Mode(String),
    /// A client-interpreted directive (e.g. a psql meta-command) preserved
    /// verbatim and never executed.
    ClientCommand(String),
}

impl ControlRecord {
    fn equivalent(&self, other: &ControlRecord) -> bool {
        match (self, other) {
            (
                ControlRecord::Loop {
                    var: va,
                    start: sa,
                    end: ea,
                    body: ba,
                },
                ControlRecord::Loop {
                    var: vb,
                    start: sb,
                    end: eb,
                    body: bb,
                },
            ) => {
                va == vb
                    && sa == sb
                    && ea == eb
                    && ba.len() == bb.len()
                    && ba.iter().zip(bb).all(|(x, y)| x.equivalent(y))
            }
            (a, b) => a == b,
        }
    }
}

/// Conditional execution marker attached to a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub polarity: Polarity,
    pub system: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    SkipIf,
    OnlyIf,
}

/// A structural invariant violation found by [`validate_script`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub line: u32,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Checks every structural invariant of a script and returns all
/// violations found; an empty list means the script is valid.
pub fn validate_script(script: &TestScript) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut prev_line = 0u32;
    validate_records(&script.records, &mut prev_line, &mut violations);
    violations
}

fn validate_records(records: &[TestRecord], prev_line: &mut u32, out: &mut Vec<Violation>) {
    for record in records {
        if record.line < 1 {
            out.push(Violation {
                line: record.line,
                message: "record line number must be >= 1".into(),
            });
        } else if record.line <= *prev_line {
            out.push(Violation {
                line: record.line,
                message: format!(
                    "record line {} not strictly greater than previous record line {}",
                    record.line, *prev_line
                ),
            });
        }
        *prev_line = record.line;

        for cond in &record.conditions {
            if cond.system.is_empty() {
                out.push(Violation {
                    line: record.line,
                    message: "condition system tag is empty".into(),
                });
            } else if cond.system.chars().any(|c| c.is_ascii_uppercase()) {
                out.push(Violation {
                    line: record.line,
                    message: format!("condition system tag {:?} is not lowercase", cond.system),
                });
            }
        }

        match &record.kind {
            RecordKind::Statement(stmt) => {
                if stmt.sql.trim().is_empty() {
                    out.push(Violation {
                        line: record.line,
                        message: "statement sql is empty".into(),
                    });
                }
            }
            RecordKind::Query(query) => validate_query(query, record.line, out),
            RecordKind::Control(ControlRecord::Loop { body, .. }) => {
                validate_records(body, prev_line, out);
            }
            RecordKind::Control(ControlRecord::Require(ext)) => {
                if ext.is_empty() {
                    out.push(Violation {
                        line: record.line,
                        message: "require extension name is empty".into(),
                    });
                }
            }
            RecordKind::Control(_) => {}
        }
    }
}

fn validate_query(query: &QueryRecord, line: u32, out: &mut Vec<Violation>) {
    if query.sql.trim().is_empty() {
        out.push(Violation {
            line,
            message: "query sql is empty".into(),
        });
    }
    match &query.expected {
        Some(ExpectedResult::Values(lines)) => {
            for (i, l) in lines.iter().enumerate() {
                if l.contains('\t') {
                    out.push(Violation {
                        line,
                        message: format!(
                            "value-wise expected line {} contains a tab (must hold exactly one value)",
                            i + 1
                        ),
                    });
                }
            }
        }
        Some(ExpectedResult::Rows(lines)) => {
            let want = query.types.len();
            for (i, l) in lines.iter().enumerate() {
                let got = l.split('\t').count();
                if got != want {
                    out.push(Violation {
                        line,
                        message: format!(
                            "row-wise expected line {} holds {} values but the type string declares {}",
                            i + 1,
                            got,
                            want
                        ),
                    });
                }
            }
        }
        Some(ExpectedResult::Digest { hash, .. }) => {
            if hash.len() != 32 || !hash.chars().all(|c| c.is_ascii_hexdigit()) {
                out.push(Violation {
                    line,
                    message: format!("digest hash {hash:?} is not 32 hex characters"),
                });
            }
        }
        None => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn query(line: u32, types: &str, expected: Option<ExpectedResult>) -> TestRecord {
        TestRecord::new(
            RecordKind::Query(QueryRecord {
                sql: "SELECT 1".into(),
                types: TypeString::parse(types).unwrap(),
                sort: SortMode::NoSort,
                label: None,
                expected,
            }),
            line,
        )
    }

    #[test]
    fn empty_script_is_valid() {
        let script = TestScript::new("t.test", FormatDialect::SltSqlite);
        assert!(validate_script(&script).is_empty());
    }

    #[test]
    fn row_arity_mismatch_is_reported_at_its_line() {
        let mut script = TestScript::new("t.test", FormatDialect::SltSqlite);
        script.records.push(query(
            3,
            "II",
            Some(ExpectedResult::Rows(vec!["1\t2\t3".into()])),
        ));
        let violations = validate_script(&script);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].line, 3);
        assert!(violations[0].message.contains("3 values"));
    }

    #[test]
    fn line_numbers_must_strictly_increase() {
        let mut script = TestScript::new("t.test", FormatDialect::SltSqlite);
        script.records.push(query(5, "I", None));
        script.records.push(query(5, "I", None));
        let violations = validate_script(&script);
        assert_eq!(violations.len(), 1);
    }

    #[test]
    fn uppercase_condition_tag_is_a_violation() {
        let mut script = TestScript::new("t.test", FormatDialect::SltSqlite);
        let mut rec = query(1, "I", None);
        rec.conditions.push(Condition {
            polarity: Polarity::SkipIf,
            system: "MySQL".into(),
        });
        script.records.push(rec);
        assert_eq!(validate_script(&script).len(), 1);
    }

    #[test]
    fn bad_type_letter_is_rejected() {
        assert_eq!(TypeString::parse("IXT"), Err('X'));
        assert_eq!(TypeString::parse("TIR").unwrap().len(), 3);
    }

    #[test]
    fn equivalence_ignores_lines_and_tags() {
        let mut a = query(1, "I", Some(ExpectedResult::Values(vec!["1".into()])));
        let mut b = query(99, "I", Some(ExpectedResult::Values(vec!["1".into()])));
        b.tags.push("unaligned".into());
        assert!(a.equivalent(&b));
        a.conditions.push(Condition {
            polarity: Polarity::OnlyIf,
            system: "sqlite".into(),
        });
        assert!(!a.equivalent(&b));
    }
}
