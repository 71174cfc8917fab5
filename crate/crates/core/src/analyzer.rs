//! Statement classification, standard-compliance checks, and corpus
//! statistics: statement-type distributions, WHERE-predicate token
//! counts, and join profiles.
//!
//! Classification is a deliberately lightweight head-keyword match over a
//! dialect-agnostic token scan; it needs no grammar and therefore works
//! identically on every suite.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ir::{ControlRecord, RecordKind, TestRecord, TestScript};

/// Classified statement type: a head keyword phrase from a closed
/// registry, or UNKNOWN.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StatementType(String);

impl StatementType {
    pub fn unknown() -> Self {
        StatementType("UNKNOWN".into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_unknown(&self) -> bool {
        self.0 == "UNKNOWN"
    }
}

impl std::fmt::Display for StatementType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Single-word statement heads.
const HEAD_KEYWORDS: &[&str] = &[
    "ABORT", "ANALYZE", "ATTACH", "BEGIN", "CALL", "CHECKPOINT", "CLOSE", "CLUSTER", "COMMENT",
    "COMMIT", "COPY", "DEALLOCATE", "DECLARE", "DELETE", "DESCRIBE", "DETACH", "DISCARD", "DO",
    "END", "EXECUTE", "EXPLAIN", "EXPORT", "FETCH", "GRANT", "IMPORT", "INSERT", "INSTALL",
    "LISTEN", "LOAD", "LOCK", "MERGE", "NOTIFY", "PRAGMA", "PREPARE", "REASSIGN", "REFRESH",
    "REINDEX", "RELEASE", "RESET", "REVOKE", "ROLLBACK", "SAVEPOINT", "SECURITY", "SELECT",
    "SHOW", "TABLE", "TRUNCATE", "UNLISTEN", "UPDATE", "USE", "VACUUM", "VALUES", "WITH",
];

/// Object kinds recognized after CREATE/DROP/ALTER.
const OBJECT_KINDS: &[&str] = &[
    "AGGREGATE", "CAST", "COLLATION", "CONVERSION", "DATABASE", "DOMAIN", "EXTENSION", "FUNCTION",
    "INDEX", "LANGUAGE", "MACRO", "OPERATOR", "POLICY", "PROCEDURE", "PUBLICATION", "ROLE",
    "RULE", "SCHEMA", "SECRET", "SEQUENCE", "SERVER", "STATISTICS", "SUBSCRIPTION", "TABLE",
    "TABLESPACE", "TRANSFORM", "TRIGGER", "TYPE", "USER", "VIEW",
];

/// Qualifier words skipped between CREATE/DROP/ALTER and the object kind.
const OBJECT_QUALIFIERS: &[&str] = &[
    "CONCURRENTLY", "EXISTS", "FOREIGN", "GLOBAL", "IF", "LOCAL", "MATERIALIZED", "NOT", "OR",
    "RECURSIVE", "REPLACE", "TEMP", "TEMPORARY", "UNIQUE", "UNLOGGED", "VIRTUAL",
];

/// Classifies a statement by its head keyword, stripping leading comments
/// and redundant outer parentheses first. CREATE/DROP/ALTER resolve to
/// two-word heads; SET resolves to SET or SET TRANSACTION; unrecognized
/// heads give UNKNOWN.
pub fn classify_statement(sql: &str) -> StatementType {
    let stripped = strip_outer_parens(sql);
    let words = head_words(stripped, 8);
    let Some(first) = words.first() else {
        return StatementType::unknown();
    };
    match first.as_str() {
        "CREATE" | "DROP" | "ALTER" => {
            for word in &words[1..] {
                if OBJECT_QUALIFIERS.contains(&word.as_str()) {
                    continue;
                }
                if OBJECT_KINDS.contains(&word.as_str()) {
                    return StatementType(format!("{first} {word}"));
                }
                break;
            }
            StatementType(first.clone())
        }
        "START" => {
            if words.get(1).map(String::as_str) == Some("TRANSACTION") {
                StatementType("START TRANSACTION".into())
            } else {
                StatementType::unknown()
            }
        }
        "SET" => {
            if words.get(1).map(String::as_str) == Some("TRANSACTION") {
                StatementType("SET TRANSACTION".into())
            } else {
                StatementType("SET".into())
            }
        }
        head if HEAD_KEYWORDS.contains(&head) => StatementType(head.to_string()),
        _ => StatementType::unknown(),
    }
}

/// Removes leading comments/whitespace and repeatedly strips outer parens
/// whose opening paren matches the final closing paren.
fn strip_outer_parens(sql: &str) -> &str {
    let mut s = skip_leading_trivia(sql).trim_end();
    loop {
        s = skip_leading_trivia(s).trim_end();
        if !s.starts_with('(') || !s.ends_with(')') {
            return s;
        }
        // The first '(' must close at the very last character.
        let mut depth = 0usize;
        let mut in_single = false;
        let mut in_double = false;
        let mut close_at = None;
        for (i, c) in s.char_indices() {
            match c {
                '\'' if !in_double => in_single = !in_single,
                '"' if !in_single => in_double = !in_double,
                '(' if !in_single && !in_double => depth += 1,
                ')' if !in_single && !in_double => {
                    depth -= 1;
                    if depth == 0 {
                        close_at = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        match close_at {
            Some(i) if i == s.len() - 1 => s = &s[1..i],
            _ => return s,
        }
    }
}

fn skip_leading_trivia(sql: &str) -> &str {
    let mut s = sql;
    loop {
        let t = s.trim_start();
        if let Some(rest) = t.strip_prefix("--") {
            s = rest.split_once('\n').map(|(_, r)| r).unwrap_or("");
        } else if let Some(rest) = t.strip_prefix("/*") {
            s = rest.split_once("*/").map(|(_, r)| r).unwrap_or("");
        } else {
            return t;
        }
    }
}

fn head_words(sql: &str, max: usize) -> Vec<String> {
    sql.split(|c: char| c.is_whitespace() || c == '(' || c == ';')
        .filter(|w| !w.is_empty())
        .take(max)
        .map(|w| w.to_ascii_uppercase())
        .collect()
}

/// Which statement types count as standard-compliant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompliancePolicy {
    pub standard_set: BTreeSet<String>,
    pub count_create_index_as_standard: bool,
}

impl Default for CompliancePolicy {
    fn default() -> Self {
        let standard_set = [
            "SELECT",
            "INSERT",
            "UPDATE",
            "DELETE",
            "CREATE TABLE",
            "CREATE VIEW",
            "DROP",
            "ALTER",
            "COMMIT",
            "ROLLBACK",
            "START TRANSACTION",
            "WITH",
            "VALUES",
            "GRANT",
            "REVOKE",
            "CREATE SCHEMA",
            "SET TRANSACTION",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        CompliancePolicy {
            standard_set,
            count_create_index_as_standard: false,
        }
    }
}

/// Membership in the policy's standard set. Two-word heads also match on
/// their first word, so a bare `DROP` entry covers every DROP kind.
pub fn is_standard(ty: &StatementType, policy: &CompliancePolicy) -> bool {
    if ty.is_unknown() {
        return false;
    }
    if ty.name() == "CREATE INDEX" {
        return policy.count_create_index_as_standard
            || policy.standard_set.contains("CREATE INDEX");
    }
    if policy.standard_set.contains(ty.name()) {
        return true;
    }
    match ty.name().split_once(' ') {
        Some((first, _)) => policy.standard_set.contains(first),
        None => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokenKind {
    Word,
    Number,
    StringLit,
    Operator,
    Punct,
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    kind: TokenKind,
}

/// Multi-character operators, longest first.
const OPERATORS: &[&str] = &[
    "->>", "#>>", "!~*", "::", ":=", "<=", ">=", "<>", "!=", "||", "->", "#>", "~~", "!~", "~*",
    "<<", ">>", "**", "|/", "&&",
];

fn tokenize(sql: &str) -> Vec<Token> {
    let chars: Vec<char> = sql.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        // Comments.
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 1;
            i += 2;
            while i < chars.len() && depth > 0 {
                if chars[i] == '/' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    i += 2;
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    depth -= 1;
                    i += 2;
                } else {
                    i += 1;
                }
            }
            continue;
        }
        // String literals with '' escapes.
        if c == '\'' {
            let start = i;
            i += 1;
            while i < chars.len() {
                if chars[i] == '\'' {
                    if chars.get(i + 1) == Some(&'\'') {
                        i += 2;
                    } else {
                        i += 1;
                        break;
                    }
                } else {
                    i += 1;
                }
            }
            tokens.push(Token {
                text: chars[start..i.min(chars.len())].iter().collect(),
                kind: TokenKind::StringLit,
            });
            continue;
        }
        // Quoted identifiers.
        if c == '"' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            i = (i + 1).min(chars.len());
            tokens.push(Token {
                text: chars[start..i].iter().collect(),
                kind: TokenKind::Word,
            });
            continue;
        }
        // Words.
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                i += 1;
            }
            tokens.push(Token {
                text: chars[start..i].iter().collect(),
                kind: TokenKind::Word,
            });
            continue;
        }
        // Numbers (decimal, hex, exponent).
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '.' || ((chars[i] == '+' || chars[i] == '-')
                        && matches!(chars.get(i.wrapping_sub(1)), Some('e') | Some('E'))))
            {
                i += 1;
            }
            tokens.push(Token {
                text: chars[start..i].iter().collect(),
                kind: TokenKind::Number,
            });
            continue;
        }
        // Multi-char operators.
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            tokens.push(Token {
                text: (*op).to_string(),
                kind: TokenKind::Operator,
            });
            i += op.len();
            continue;
        }
        tokens.push(Token {
            text: c.to_string(),
            kind: if c == '(' || c == ')' || c == ',' || c == ';' {
                TokenKind::Punct
            } else {
                TokenKind::Operator
            },
        });
        i += 1;
    }
    tokens
}

/// Clause keywords that end a top-level WHERE predicate.
const WHERE_TERMINATORS: &[&str] = &["GROUP", "ORDER", "LIMIT", "HAVING", "WINDOW"];

/// Counts lexical tokens in the top-level WHERE predicate of a SELECT;
/// 0 when there is no WHERE clause.
pub fn where_token_count(sql: &str) -> usize {
    let tokens = tokenize(strip_outer_parens(sql));
    let mut depth = 0i32;
    let mut counting = false;
    let mut count = 0usize;
    for token in &tokens {
        match token.kind {
            TokenKind::Punct if token.text == "(" => depth += 1,
            TokenKind::Punct if token.text == ")" => depth -= 1,
            _ => {}
        }
        if depth == 0 && token.kind == TokenKind::Word {
            let upper = token.text.to_ascii_uppercase();
            if !counting && upper == "WHERE" {
                counting = true;
                continue;
            }
            if counting && WHERE_TERMINATORS.contains(&upper.as_str()) {
                break;
            }
        }
        if counting && !(token.kind == TokenKind::Punct && token.text == ";") {
            count += 1;
        }
    }
    count
}

/// Join usage of a SELECT statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JoinProfile {
    None,
    Implicit,
    Explicit(JoinKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JoinKind {
    Inner,
    Left,
    Right,
    Full,
    Cross,
}

impl JoinKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JoinKind::Inner => "INNER",
            JoinKind::Left => "LEFT",
            JoinKind::Right => "RIGHT",
            JoinKind::Full => "FULL",
            JoinKind::Cross => "CROSS",
        }
    }
}

const FROM_TERMINATORS: &[&str] = &[
    "WHERE", "GROUP", "ORDER", "LIMIT", "HAVING", "WINDOW", "UNION", "INTERSECT", "EXCEPT",
];

/// Detects implicit (comma) and explicit (JOIN keyword) joins in the
/// top-level FROM clause.
pub fn join_profile(sql: &str) -> JoinProfile {
    let tokens = tokenize(strip_outer_parens(sql));
    let mut depth = 0i32;
    let mut in_from = false;
    let mut comma_seen = false;
    let mut prev_word: Option<String> = None;
    let mut prev_prev_word: Option<String> = None;
    for token in &tokens {
        match token.kind {
            TokenKind::Punct if token.text == "(" => {
                depth += 1;
                continue;
            }
            TokenKind::Punct if token.text == ")" => {
                depth -= 1;
                continue;
            }
            _ => {}
        }
        if depth != 0 {
            continue;
        }
        if token.kind == TokenKind::Word {
            let upper = token.text.to_ascii_uppercase();
            if !in_from && upper == "FROM" {
                in_from = true;
                prev_word = None;
                prev_prev_word = None;
                continue;
            }
            if in_from {
                if FROM_TERMINATORS.contains(&upper.as_str()) {
                    break;
                }
                if upper == "JOIN" {
                    let kind = match (prev_word.as_deref(), prev_prev_word.as_deref()) {
                        (Some("INNER"), _) => JoinKind::Inner,
                        (Some("LEFT"), _) => JoinKind::Left,
                        (Some("RIGHT"), _) => JoinKind::Right,
                        (Some("FULL"), _) => JoinKind::Full,
                        (Some("CROSS"), _) => JoinKind::Cross,
                        (Some("OUTER"), Some("LEFT")) => JoinKind::Left,
                        (Some("OUTER"), Some("RIGHT")) => JoinKind::Right,
                        (Some("OUTER"), Some("FULL")) => JoinKind::Full,
                        _ => JoinKind::Inner,
                    };
                    return JoinProfile::Explicit(kind);
                }
                prev_prev_word = prev_word.take();
                prev_word = Some(upper);
            }
        } else if in_from && token.kind == TokenKind::Punct && token.text == "," {
            comma_seen = true;
            prev_word = None;
            prev_prev_word = None;
        }
    }
    if comma_seen {
        JoinProfile::Implicit
    } else {
        JoinProfile::None
    }
}

/// Aggregate corpus statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteStats {
    pub file_count: u64,
    pub total_statements: u64,
    pub type_counts: BTreeMap<String, u64>,
    pub standard_count: u64,
    pub standard_fraction: f64,
    pub exclusive_standard_files: u64,
    pub exclusive_standard_file_fraction: f64,
    pub where_token_histogram: Vec<WhereBucket>,
    pub join_profile: JoinStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhereBucket {
    pub label: String,
    pub count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinStats {
    pub none: u64,
    pub implicit: u64,
    pub explicit: BTreeMap<String, u64>,
}

/// Default WHERE-token bucket edges: 0 | 1-2 | 3-10 | 11-100 | >100.
pub const DEFAULT_WHERE_BUCKET_EDGES: &[usize] = &[1, 3, 11, 101];

pub fn suite_stats(scripts: &[TestScript], policy: &CompliancePolicy) -> SuiteStats {
    suite_stats_with_buckets(scripts, policy, DEFAULT_WHERE_BUCKET_EDGES)
}

pub fn suite_stats_with_buckets(
    scripts: &[TestScript],
    policy: &CompliancePolicy,
    bucket_edges: &[usize],
) -> SuiteStats {
    // Bucket 0 is "no WHERE clause"; payload buckets start at 1, so a
    // leading edge above 1 gets an implicit 1..edge bucket.
    let mut edges: Vec<usize> = bucket_edges.to_vec();
    edges.retain(|&e| e > 0);
    if edges.first() != Some(&1) {
        edges.insert(0, 1);
    }
    let bucket_edges = edges.as_slice();

    let mut type_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut standard_count = 0u64;
    let mut total = 0u64;
    let mut exclusive_files = 0u64;
    let mut bucket_counts = vec![0u64; bucket_edges.len() + 1];
    let mut joins = JoinStats::default();

    for script in scripts {
        let mut all_standard = true;
        let mut sqls: Vec<&str> = Vec::new();
        collect_sql(&script.records, &mut sqls);
        for sql in sqls {
            total += 1;
            let ty = classify_statement(sql);
            *type_counts.entry(ty.name().to_string()).or_insert(0) += 1;
            if is_standard(&ty, policy) {
                standard_count += 1;
            } else {
                all_standard = false;
            }
            if ty.name() == "SELECT" {
                let n = where_token_count(sql);
                bucket_counts[bucket_index(n, bucket_edges)] += 1;
                match join_profile(sql) {
                    JoinProfile::None => joins.none += 1,
                    JoinProfile::Implicit => joins.implicit += 1,
                    JoinProfile::Explicit(kind) => {
                        *joins.explicit.entry(kind.as_str().to_string()).or_insert(0) += 1;
                    }
                }
            }
        }
        if all_standard {
            exclusive_files += 1;
        }
    }

    let file_count = scripts.len() as u64;
    let frac = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    SuiteStats {
        file_count,
        total_statements: total,
        standard_count,
        standard_fraction: frac(standard_count, total),
        exclusive_standard_files: exclusive_files,
        exclusive_standard_file_fraction: frac(exclusive_files, file_count),
        where_token_histogram: bucket_labels(bucket_edges)
            .into_iter()
            .zip(bucket_counts)
            .map(|(label, count)| WhereBucket { label, count })
            .collect(),
        join_profile: joins,
        type_counts,
    }
}

fn collect_sql<'a>(records: &'a [TestRecord], out: &mut Vec<&'a str>) {
    for record in records {
        match &record.kind {
            RecordKind::Statement(s) => out.push(&s.sql),
            RecordKind::Query(q) => out.push(&q.sql),
            RecordKind::Control(ControlRecord::Loop { body, .. }) => collect_sql(body, out),
            RecordKind::Control(_) => {}
        }
    }
}

fn bucket_index(n: usize, edges: &[usize]) -> usize {
    if n == 0 {
        return 0;
    }
    for (i, &edge) in edges.iter().enumerate().rev() {
        if n >= edge {
            return i + 1;
        }
    }
    1
}

fn bucket_labels(edges: &[usize]) -> Vec<String> {
    let mut labels = vec!["0".to_string()];
    for (i, &lo) in edges.iter().enumerate() {
        match edges.get(i + 1) {
            Some(&next) => {
                if next - 1 == lo {
                    labels.push(lo.to_string());
                } else {
                    labels.push(format!("{lo}-{}", next - 1));
                }
            }
            None => labels.push(format!(">{}", lo - 1)),
        }
    }
    labels
}

/// Figure-2-shaped CSV: statement type, count, fraction.
pub fn stats_types_csv(stats: &SuiteStats) -> String {
    let mut rows: Vec<(&String, &u64)> = stats.type_counts.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let mut out = String::from("type,count,fraction\n");
    for (ty, count) in rows {
        let frac = if stats.total_statements == 0 {
            0.0
        } else {
            *count as f64 / stats.total_statements as f64
        };
        out.push_str(&format!("{ty},{count},{frac:.6}\n"));
    }
    out
}

/// Figure-3-shaped CSV: WHERE-token bucket, count.
pub fn stats_where_csv(stats: &SuiteStats) -> String {
    let mut out = String::from("bucket,count\n");
    for bucket in &stats.where_token_histogram {
        out.push_str(&format!("{},{}\n", bucket.label, bucket.count));
    }
    out
}
