//! Parser for PostgreSQL regression suites: a SQL test file plus an
//! optional paired expected-output file.
//!
//! The SQL file is split into top-level statements; the expected file is
//! aligned statement by statement against its echoed input so that result
//! tables and error lines can be attached to individual records. This is
//! statement-level granularity over a format whose upstream runner diffs
//! whole files, so statements that cannot be aligned degrade to warnings
//! rather than failures.

use crate::ir::{
    ColumnType, ControlRecord, ExpectedResult, FormatDialect, QueryRecord, RecordKind, SortMode,
    StatementExpect, StatementRecord, TestRecord, TestScript, TypeString,
};
use crate::parse::split::{split_statements, ChunkKind, SplitOptions};
use crate::parse::{decode_utf8, ParseDiagnostic};

/// Parses a regression SQL file, aligning result tables and error lines
/// from `expected_text` when present. Never fails: problems degrade to
/// diagnostics plus records tagged `unaligned`.
pub fn parse_pg_regression(
    sql_text: &[u8],
    expected_text: Option<&[u8]>,
    source_path: &str,
) -> (TestScript, Vec<ParseDiagnostic>) {
    let mut diagnostics = Vec::new();
    let sql = decode_utf8(sql_text, &mut diagnostics);
    let expected = expected_text.map(|b| decode_utf8(b, &mut diagnostics));

    let mut script = TestScript::new(source_path, FormatDialect::PgRegression);
    let chunks = split_statements(&sql, SplitOptions::postgres());
    let mut aligner = expected.as_deref().map(Aligner::new);

    let mut unaligned = 0u32;
    let mut client_vars = 0u32;

    for chunk in chunks {
        match chunk.kind {
            ChunkKind::Meta => {
                script.records.push(TestRecord::new(
                    RecordKind::Control(ControlRecord::ClientCommand(chunk.text)),
                    chunk.line,
                ));
            }
            ChunkKind::Sql => {
                let mut record = match aligner.as_mut() {
                    Some(aligner) => match aligner.align(&chunk.text) {
                        Some(found) => aligned_record(&chunk.text, found, chunk.line, &mut diagnostics),
                        None => {
                            unaligned += 1;
                            diagnostics.push(ParseDiagnostic::warning(
                                chunk.line,
                                "statement not found in expected output; marked unaligned",
                            ));
                            let mut r = plain_record(&chunk.text, chunk.line);
                            r.tags.push("unaligned".into());
                            r
                        }
                    },
                    None => plain_record(&chunk.text, chunk.line),
                };
                if references_client_variable(&chunk.text) {
                    client_vars += 1;
                    record.tags.push("client-var".into());
                }
                script.records.push(record);
            }
        }
    }

    if unaligned > 0 {
        script
            .metadata
            .insert("unaligned".into(), unaligned.to_string());
    }
    if client_vars > 0 {
        script
            .metadata
            .insert("client-vars".into(), client_vars.to_string());
    }
    (script, diagnostics)
}

/// What the expected file showed right after a statement's echo.
enum Aligned {
    /// No output block: the statement just ran.
    Plain,
    Error(String),
    Table {
        columns: usize,
        rows: Vec<Vec<String>>,
        declared_count: usize,
    },
}

fn aligned_record(
    sql: &str,
    found: Aligned,
    line: u32,
    diagnostics: &mut Vec<ParseDiagnostic>,
) -> TestRecord {
    match found {
        Aligned::Plain => plain_record(sql, line),
        Aligned::Error(message) => TestRecord::new(
            RecordKind::Statement(StatementRecord {
                sql: sql.to_string(),
                expect: StatementExpect::Error(Some(message)),
            }),
            line,
        ),
        Aligned::Table {
            columns,
            rows,
            declared_count,
        } => {
            if rows.len() != declared_count {
                diagnostics.push(ParseDiagnostic::warning(
                    line,
                    format!(
                        "expected block declares {declared_count} row(s) but shows {}",
                        rows.len()
                    ),
                ));
            }
            let lines: Vec<String> = rows.into_iter().map(|r| r.join("\t")).collect();
            TestRecord::new(
                RecordKind::Query(QueryRecord {
                    sql: sql.to_string(),
                    types: TypeString(vec![ColumnType::Text; columns]),
                    sort: SortMode::NoSort,
                    label: None,
                    expected: Some(ExpectedResult::Rows(lines)),
                }),
                line,
            )
        }
    }
}

/// Without an expected pair, selects become result-less queries and
/// everything else a plain statement.
fn plain_record(sql: &str, line: u32) -> TestRecord {
    let head = sql
        .trim_start()
        .split_whitespace()
        .next()
        .map(|w| w.to_ascii_uppercase())
        .unwrap_or_default();
    let kind = match head.as_str() {
        "SELECT" | "VALUES" | "WITH" | "TABLE" => RecordKind::Query(QueryRecord {
            sql: sql.to_string(),
            types: TypeString(Vec::new()),
            sort: SortMode::NoSort,
            label: None,
            expected: None,
        }),
        _ => RecordKind::Statement(StatementRecord {
            sql: sql.to_string(),
            expect: StatementExpect::Ok,
        }),
    };
    TestRecord::new(kind, line)
}

/// psql variable references (`:name`, `:'name'`, `:"name"`) outside
/// strings; `::` casts do not count.
fn references_client_variable(sql: &str) -> bool {
    let bytes: Vec<char> = sql.chars().collect();
    let mut in_single = false;
    let mut in_double = false;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            '\'' if !in_double => in_single = !in_single,
            '"' if !in_single => in_double = !in_double,
            ':' if !in_single && !in_double => {
                let prev = i.checked_sub(1).map(|p| bytes[p]);
                let next = bytes.get(i + 1).copied();
                if prev == Some(':') || next == Some(':') {
                    i += 1;
                    continue;
                }
                match next {
                    Some(n) if n.is_ascii_alphabetic() || n == '_' => return true,
                    Some('\'') | Some('"') => {
                        if bytes
                            .get(i + 2)
                            .is_some_and(|n| n.is_ascii_alphabetic() || *n == '_')
                        {
                            return true;
                        }
                    }
                    _ => {}
                }
            }
            _ => {}
        }
        i += 1;
    }
    false
}

/// Walks the expected-output file, locating each statement's echoed text
/// by whitespace-normalized match and reading the block that follows.
/// Ambiguity is resolved by always scanning forward from the previous
/// match.
struct Aligner<'a> {
    lines: Vec<&'a str>,
    cursor: usize,
}

impl<'a> Aligner<'a> {
    fn new(text: &'a str) -> Self {
        Aligner {
            lines: text.lines().collect(),
            cursor: 0,
        }
    }

    fn align(&mut self, sql: &str) -> Option<Aligned> {
        let wanted: Vec<String> = sql.lines().map(normalize_ws).collect();
        if wanted.is_empty() {
            return None;
        }
        let k = wanted.len();
        let mut i = self.cursor;
        while i + k <= self.lines.len() {
            if (0..k).all(|j| normalize_ws(self.lines[i + j]) == wanted[j]) {
                self.cursor = i + k;
                return Some(self.read_block());
            }
            i += 1;
        }
        None
    }

    fn read_block(&mut self) -> Aligned {
        let Some(first) = self.lines.get(self.cursor) else {
            return Aligned::Plain;
        };
        let trimmed = first.trim_start();
        if let Some(message) = trimmed.strip_prefix("ERROR:") {
            self.cursor += 1;
            while self
                .lines
                .get(self.cursor)
                .is_some_and(|l| is_error_detail_line(l))
            {
                self.cursor += 1;
            }
            return Aligned::Error(message.trim().to_string());
        }
        // Result table: header, dashes separator, rows, "(N rows)".
        if let Some(sep) = self.lines.get(self.cursor + 1) {
            if is_table_separator(sep) {
                let header = self.lines[self.cursor];
                let columns = header.split('|').count();
                let mut rows = Vec::new();
                let mut p = self.cursor + 2;
                while let Some(line) = self.lines.get(p) {
                    if let Some(count) = parse_row_count(line) {
                        self.cursor = p + 1;
                        return Aligned::Table {
                            columns,
                            rows,
                            declared_count: count,
                        };
                    }
                    if line.trim().is_empty() {
                        break;
                    }
                    rows.push(line.split('|').map(|c| c.trim().to_string()).collect());
                    p += 1;
                }
            }
        }
        Aligned::Plain
    }
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_error_detail_line(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("DETAIL:")
        || t.starts_with("HINT:")
        || t.starts_with("LINE ")
        || t.starts_with("CONTEXT:")
        || (!t.is_empty() && t.chars().all(|c| c == '^' || c.is_whitespace()))
}

fn is_table_separator(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && t.contains('-') && t.chars().all(|c| c == '-' || c == '+' || c == ' ')
}

fn parse_row_count(line: &str) -> Option<usize> {
    let t = line.trim();
    let inner = t.strip_prefix('(')?.strip_suffix(')')?;
    let (num, word) = inner.split_once(' ')?;
    if word == "row" || word == "rows" {
        num.parse().ok()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records_of(sql: &str, expected: Option<&str>) -> (TestScript, Vec<ParseDiagnostic>) {
        parse_pg_regression(sql.as_bytes(), expected.map(str::as_bytes), "t.sql")
    }

    #[test]
    fn select_with_expected_table_becomes_query() {
        let (script, diags) = records_of(
            "SELECT 1;\n",
            Some("SELECT 1;\n ?column? \n----------\n        1\n(1 row)\n"),
        );
        assert!(diags.is_empty());
        assert_eq!(script.records.len(), 1);
        match &script.records[0].kind {
            RecordKind::Query(q) => {
                assert_eq!(q.types.len(), 1);
                assert_eq!(q.expected, Some(ExpectedResult::Rows(vec!["1".into()])));
            }
            other => panic!("expected query, got {other:?}"),
        }
    }

    #[test]
    fn error_line_maps_to_error_expectation() {
        let (script, _) = records_of(
            "SELECT 1/0;\n",
            Some("SELECT 1/0;\nERROR:  division by zero\n"),
        );
        match &script.records[0].kind {
            RecordKind::Statement(s) => {
                assert_eq!(
                    s.expect,
                    StatementExpect::Error(Some("division by zero".into()))
                );
            }
            other => panic!("expected statement, got {other:?}"),
        }
    }

    #[test]
    fn client_variable_is_tagged() {
        let (script, _) = records_of(
            "CREATE FUNCTION f() RETURNS int AS :'regresslib' LANGUAGE c;\n",
            None,
        );
        assert_eq!(script.records[0].tags, vec!["client-var"]);
        assert_eq!(script.metadata.get("client-vars").map(String::as_str), Some("1"));
    }

    #[test]
    fn cast_operator_is_not_a_client_variable() {
        assert!(!references_client_variable("SELECT 1::int"));
        assert!(references_client_variable("SELECT :x"));
        assert!(references_client_variable("SELECT :'libdir'"));
        assert!(!references_client_variable("SELECT ':x'"));
    }

    #[test]
    fn unalignable_statement_is_tagged_with_warning() {
        let (script, diags) = records_of(
            "SELECT 42;\n",
            Some("SELECT 99;\n ?column? \n----------\n       99\n(1 row)\n"),
        );
        assert_eq!(script.records[0].tags, vec!["unaligned"]);
        assert!(diags.iter().any(|d| !d.is_error()));
        assert!(diags.iter().all(|d| !d.is_error()));
        assert_eq!(script.metadata.get("unaligned").map(String::as_str), Some("1"));
    }

    #[test]
    fn meta_commands_become_client_command_controls() {
        let (script, _) = records_of("\\set x 1\nSELECT 1;\n", None);
        assert_eq!(script.records.len(), 2);
        assert_eq!(
            script.records[0].kind,
            RecordKind::Control(ControlRecord::ClientCommand("\\set x 1".into()))
        );
    }

    #[test]
    fn multi_statement_alignment_scans_forward() {
        let expected = "\
CREATE TABLE t(a int);
INSERT INTO t VALUES (1);
SELECT a FROM t;
 a
---
 1
(1 row)
SELECT a FROM t;
 a
---
 1
(1 row)
";
        let (script, diags) = records_of(
            "CREATE TABLE t(a int);\nINSERT INTO t VALUES (1);\nSELECT a FROM t;\nSELECT a FROM t;\n",
            Some(expected),
        );
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(script.records.len(), 4);
        assert!(matches!(script.records[2].kind, RecordKind::Query(_)));
        assert!(matches!(script.records[3].kind, RecordKind::Query(_)));
    }

    #[test]
    fn zero_row_table() {
        let (script, _) = records_of(
            "SELECT a FROM t;\n",
            Some("SELECT a FROM t;\n a \n---\n(0 rows)\n"),
        );
        match &script.records[0].kind {
            RecordKind::Query(q) => assert_eq!(q.expected, Some(ExpectedResult::Rows(vec![]))),
            other => panic!("expected query, got {other:?}"),
        }
    }
}
