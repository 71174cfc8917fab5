//! Parser and serializer for the sqllogictest (SLT) family of formats.
//!
//! The sqlite dialect supports the four classic runner directives
//! (skipif/onlyif, halt, hash-threshold). The duckdb dialect adds
//! require, loop/endloop, load, mode, set, expected error messages after
//! `----`, and row-wise expected blocks.

use thiserror::Error;

use crate::ir::{
    Condition, ControlRecord, ExpectedResult, FormatDialect, Polarity, QueryRecord, RecordKind,
    SortMode, StatementExpect, StatementRecord, TestRecord, TestScript, TypeString,
};
use crate::parse::{decode_utf8, ParseDiagnostic};

/// Which SLT flavor to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SltDialect {
    Sqlite,
    Duckdb,
}

impl SltDialect {
    pub fn format(self) -> FormatDialect {
        match self {
            SltDialect::Sqlite => FormatDialect::SltSqlite,
            SltDialect::Duckdb => FormatDialect::SltDuckdb,
        }
    }
}

/// Parses SLT-format text into a script plus diagnostics. Malformed
/// records are skipped with an error diagnostic; parsing never fails
/// outright.
pub fn parse_slt(
    input: &[u8],
    dialect: SltDialect,
    source_path: &str,
) -> (TestScript, Vec<ParseDiagnostic>) {
    let mut diagnostics = Vec::new();
    let text = decode_utf8(input, &mut diagnostics);
    let lines: Vec<&str> = text.lines().collect();
    let mut parser = SltParser {
        dialect,
        lines,
        pos: 0,
        diagnostics,
    };
    let records = parser.parse_records(false);
    let mut script = TestScript::new(source_path, dialect.format());
    script.records = records;
    (script, parser.diagnostics)
}

struct SltParser<'a> {
    dialect: SltDialect,
    lines: Vec<&'a str>,
    pos: usize,
    diagnostics: Vec<ParseDiagnostic>,
}

impl<'a> SltParser<'a> {
    fn line_no(&self) -> u32 {
        (self.pos + 1) as u32
    }

    fn current(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|l| l.trim_end_matches('\r'))
    }

    fn is_duckdb(&self) -> bool {
        self.dialect == SltDialect::Duckdb
    }

    fn error(&mut self, line: u32, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic::error(line, message));
    }

    fn warning(&mut self, line: u32, message: impl Into<String>) {
        self.diagnostics
            .push(ParseDiagnostic::warning(line, message));
    }

    /// Skips the rest of the current blank-line-delimited block.
    fn skip_block(&mut self) {
        while let Some(line) = self.current() {
            if line.trim().is_empty() {
                break;
            }
            self.pos += 1;
        }
    }

    fn parse_records(&mut self, inside_loop: bool) -> Vec<TestRecord> {
        let mut records = Vec::new();
        'blocks: loop {
            // Skip blank and full-line comment lines between records.
            while let Some(line) = self.current() {
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let Some(_) = self.current() else {
                if inside_loop {
                    self.error(self.line_no(), "loop body not terminated by endloop");
                }
                return records;
            };

            // Leading skipif/onlyif lines attach to the record in the
            // same block; a block of only conditions becomes standalone
            // condition controls.
            let mut conditions: Vec<(Condition, u32)> = Vec::new();
            loop {
                let Some(line) = self.current() else {
                    standalone_conditions(&mut records, &mut conditions);
                    if inside_loop {
                        self.error(self.line_no(), "loop body not terminated by endloop");
                    }
                    return records;
                };
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    standalone_conditions(&mut records, &mut conditions);
                    continue 'blocks;
                }
                if trimmed.starts_with('#') {
                    self.pos += 1;
                    continue;
                }
                let directive = strip_directive_comment(trimmed);
                let tokens: Vec<&str> = directive.split_whitespace().collect();
                match tokens.first().copied() {
                    Some("skipif") | Some("onlyif") => {
                        let line_no = self.line_no();
                        if let Some(tag) = tokens.get(1) {
                            let polarity = if tokens[0] == "skipif" {
                                Polarity::SkipIf
                            } else {
                                Polarity::OnlyIf
                            };
                            conditions.push((
                                Condition {
                                    polarity,
                                    system: tag.to_ascii_lowercase(),
                                },
                                line_no,
                            ));
                        } else {
                            self.error(line_no, format!("{} without a system tag", tokens[0]));
                        }
                        self.pos += 1;
                    }
                    Some("endloop") => {
                        standalone_conditions(&mut records, &mut conditions);
                        if inside_loop {
                            self.pos += 1;
                            return records;
                        }
                        self.error(self.line_no(), "endloop outside of a loop");
                        self.pos += 1;
                        continue 'blocks;
                    }
                    _ => {
                        let conds = conditions.drain(..).map(|(c, _)| c).collect();
                        if let Some(record) = self.parse_one_record(&tokens, conds) {
                            records.push(record);
                        }
                        continue 'blocks;
                    }
                }
            }
        }
    }

    fn parse_one_record(
        &mut self,
        header_tokens: &[&str],
        conditions: Vec<Condition>,
    ) -> Option<TestRecord> {
        let line_no = self.line_no();
        let kind = match header_tokens.first().copied() {
            Some("statement") => self.parse_statement(header_tokens, line_no),
            Some("query") => self.parse_query(header_tokens, line_no),
            Some("halt") => {
                self.pos += 1;
                Some(RecordKind::Control(ControlRecord::Halt))
            }
            Some("hash-threshold") => {
                self.pos += 1;
                match header_tokens.get(1).and_then(|t| t.parse::<u32>().ok()) {
                    Some(n) => Some(RecordKind::Control(ControlRecord::HashThreshold(n))),
                    None => {
                        self.error(line_no, "hash-threshold needs a non-negative integer");
                        None
                    }
                }
            }
            Some("require") if self.is_duckdb() => {
                self.pos += 1;
                match header_tokens.get(1) {
                    Some(ext) => Some(RecordKind::Control(ControlRecord::Require(
                        ext.to_string(),
                    ))),
                    None => {
                        self.error(line_no, "require without an extension name");
                        None
                    }
                }
            }
            Some("load") if self.is_duckdb() => {
                self.pos += 1;
                Some(RecordKind::Control(ControlRecord::Load(
                    header_tokens[1..].join(" "),
                )))
            }
            Some("mode") if self.is_duckdb() => {
                self.pos += 1;
                Some(RecordKind::Control(ControlRecord::Mode(
                    header_tokens[1..].join(" "),
                )))
            }
            Some("set") if self.is_duckdb() => {
                self.pos += 1;
                match header_tokens.get(1) {
                    Some(name) if header_tokens.len() >= 3 => {
                        Some(RecordKind::Control(ControlRecord::SetVariable {
                            name: name.to_string(),
                            value: header_tokens[2..].join(" "),
                        }))
                    }
                    _ => {
                        self.error(line_no, "set needs a name and a value");
                        None
                    }
                }
            }
            Some("loop") if self.is_duckdb() => return self.parse_loop(header_tokens, conditions),
            Some(other) => {
                self.error(line_no, format!("unknown record header {other:?}"));
                self.skip_block();
                None
            }
            None => None,
        };
        let kind = match kind {
            Some(k) => k,
            None => {
                self.skip_block();
                return None;
            }
        };
        let mut record = TestRecord::new(kind, line_no);
        record.conditions = conditions;
        Some(record)
    }

    fn parse_loop(
        &mut self,
        header_tokens: &[&str],
        conditions: Vec<Condition>,
    ) -> Option<TestRecord> {
        let line_no = self.line_no();
        let parsed = (|| {
            let var = header_tokens.get(1)?.to_string();
            let start = header_tokens.get(2)?.parse::<i64>().ok()?;
            let end = header_tokens.get(3)?.parse::<i64>().ok()?;
            Some((var, start, end))
        })();
        let Some((var, start, end)) = parsed else {
            self.error(line_no, "loop needs a variable and integer start/end");
            self.skip_block();
            return None;
        };
        self.pos += 1;
        let body = self.parse_records(true);
        let mut record = TestRecord::new(
            RecordKind::Control(ControlRecord::Loop {
                var,
                start,
                end,
                body,
            }),
            line_no,
        );
        record.conditions = conditions;
        Some(record)
    }

    fn parse_statement(&mut self, tokens: &[&str], line_no: u32) -> Option<RecordKind> {
        let expect = match tokens.get(1).copied() {
            Some("ok") => StatementExpect::Ok,
            Some("error") => StatementExpect::Error(None),
            other => {
                self.error(
                    line_no,
                    format!("statement header expects ok|error, got {other:?}"),
                );
                return None;
            }
        };
        self.pos += 1;
        let sql = self.collect_sql_lines();
        if sql.is_empty() {
            self.error(line_no, "statement with no sql");
            return None;
        }
        let expect = if self.at_separator() {
            self.pos += 1;
            let message = self.collect_verbatim_lines().join("\n");
            if !self.is_duckdb() {
                self.warning(
                    line_no,
                    "expected-error message after ---- is a duckdb extension",
                );
            }
            match expect {
                StatementExpect::Error(_) => {
                    StatementExpect::Error(if message.is_empty() {
                        None
                    } else {
                        Some(message)
                    })
                }
                StatementExpect::Ok => {
                    self.error(line_no, "statement ok cannot carry an expected message");
                    StatementExpect::Ok
                }
            }
        } else {
            expect
        };
        Some(RecordKind::Statement(StatementRecord {
            sql: sql.join("\n"),
            expect,
        }))
    }

    fn parse_query(&mut self, tokens: &[&str], line_no: u32) -> Option<RecordKind> {
        let Some(type_token) = tokens.get(1) else {
            self.error(line_no, "query header without a type string");
            return None;
        };
        let types = match TypeString::parse(type_token) {
            Ok(t) => t,
            Err(c) => {
                self.error(
                    line_no,
                    format!("type string {type_token:?} has a letter {c:?} outside T/I/R"),
                );
                return None;
            }
        };
        let mut sort = SortMode::NoSort;
        let mut label = None;
        if let Some(tok) = tokens.get(2) {
            match SortMode::parse(tok) {
                Some(m) => sort = m,
                None => {
                    self.error(line_no, format!("unknown sort mode {tok:?}"));
                    return None;
                }
            }
            label = tokens.get(3).map(|s| s.to_string());
            if tokens.len() > 4 {
                self.warning(line_no, "extra tokens after query label ignored");
            }
        }
        self.pos += 1;
        let sql = self.collect_sql_lines();
        if sql.is_empty() {
            self.error(line_no, "query with no sql");
            return None;
        }
        let expected = if self.at_separator() {
            self.pos += 1;
            let lines = self.collect_verbatim_lines();
            self.classify_expected(lines, &types, line_no)?
        } else {
            None
        };
        Some(RecordKind::Query(QueryRecord {
            sql: sql.join("\n"),
            types,
            sort,
            label,
            expected,
        }))
    }

    fn classify_expected(
        &mut self,
        lines: Vec<String>,
        types: &TypeString,
        line_no: u32,
    ) -> Option<Option<ExpectedResult>> {
        if lines.len() == 1 && lines[0].contains("values hashing to") {
            let mut parts = lines[0].split_whitespace();
            let count = parts.next().and_then(|t| t.parse::<u64>().ok());
            let rest: Vec<&str> = parts.collect();
            let hash = match rest.as_slice() {
                ["values", "hashing", "to", h] => Some(*h),
                _ => None,
            };
            match (count, hash) {
                (Some(value_count), Some(h))
                    if h.len() == 32 && h.chars().all(|c| c.is_ascii_hexdigit()) =>
                {
                    return Some(Some(ExpectedResult::Digest {
                        value_count,
                        hash: h.to_ascii_lowercase(),
                    }));
                }
                _ => {
                    self.error(
                        line_no,
                        format!(
                            "digest line {:?} does not match \"N values hashing to H\"",
                            lines[0]
                        ),
                    );
                    return None;
                }
            }
        }
        let row_wise = self.is_duckdb()
            && (lines.iter().any(|l| l.contains('\t'))
                || (types.len() > 1
                    && !lines.is_empty()
                    && lines.iter().all(|l| l.split('\t').count() == types.len())));
        Some(Some(if row_wise {
            ExpectedResult::Rows(lines)
        } else {
            ExpectedResult::Values(lines)
        }))
    }

    fn at_separator(&self) -> bool {
        self.current().map(|l| l.trim() == "----").unwrap_or(false)
    }

    /// SQL lines run until `----`, a blank line, or end of input;
    /// full-line comments are skipped.
    fn collect_sql_lines(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(line) = self.current() {
            let t = line.trim();
            if t.is_empty() || t == "----" {
                break;
            }
            if t.starts_with('#') {
                self.pos += 1;
                continue;
            }
            out.push(line.to_string());
            self.pos += 1;
        }
        out
    }

    /// Expected-result lines run verbatim until a blank line or end of
    /// input.
    fn collect_verbatim_lines(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(line) = self.current() {
            if line.trim().is_empty() {
                break;
            }
            out.push(line.to_string());
            self.pos += 1;
        }
        out
    }
}

fn standalone_conditions(records: &mut Vec<TestRecord>, conditions: &mut Vec<(Condition, u32)>) {
    for (cond, line) in conditions.drain(..) {
        let control = match cond.polarity {
            Polarity::SkipIf => ControlRecord::SkipIf(cond.system),
            Polarity::OnlyIf => ControlRecord::OnlyIf(cond.system),
        };
        records.push(TestRecord::new(RecordKind::Control(control), line));
    }
}

/// Directive lines may carry trailing `#` comments; SQL and expected
/// lines never get stripped.
fn strip_directive_comment(line: &str) -> &str {
    match line.find('#') {
        Some(idx) => line[..idx].trim_end(),
        None => line,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("script fails validation with {0} violation(s)")]
    Invalid(usize),
    #[error("line {line}: {kind} record has no SLT representation")]
    Unrepresentable { line: u32, kind: &'static str },
}

/// Serializes a script back to SLT text such that re-parsing yields a
/// record-equivalent script.
pub fn serialize_slt(script: &TestScript) -> Result<String, SerializeError> {
    let violations = crate::ir::validate_script(script);
    if !violations.is_empty() {
        return Err(SerializeError::Invalid(violations.len()));
    }
    let mut blocks = Vec::new();
    for record in &script.records {
        blocks.push(serialize_record(record)?);
    }
    let mut out = blocks.join("\n\n");
    if !out.is_empty() {
        out.push('\n');
    }
    Ok(out)
}

fn serialize_record(record: &TestRecord) -> Result<String, SerializeError> {
    let mut out = String::new();
    for cond in &record.conditions {
        let word = match cond.polarity {
            Polarity::SkipIf => "skipif",
            Polarity::OnlyIf => "onlyif",
        };
        out.push_str(&format!("{word} {}\n", cond.system));
    }
    match &record.kind {
        RecordKind::Statement(stmt) => {
            match &stmt.expect {
                StatementExpect::Ok => out.push_str("statement ok\n"),
                StatementExpect::Error(_) => out.push_str("statement error\n"),
            }
            out.push_str(&stmt.sql);
            if let StatementExpect::Error(Some(message)) = &stmt.expect {
                out.push_str("\n----\n");
                out.push_str(message);
            }
        }
        RecordKind::Query(query) => {
            out.push_str(&format!("query {}", query.types));
            if query.sort != SortMode::NoSort || query.label.is_some() {
                out.push_str(&format!(" {}", query.sort.as_str()));
            }
            if let Some(label) = &query.label {
                out.push_str(&format!(" {label}"));
            }
            out.push('\n');
            out.push_str(&query.sql);
            match &query.expected {
                None => {}
                Some(ExpectedResult::Values(lines)) | Some(ExpectedResult::Rows(lines)) => {
                    out.push_str("\n----");
                    for line in lines {
                        out.push('\n');
                        out.push_str(line);
                    }
                }
                Some(ExpectedResult::Digest { value_count, hash }) => {
                    out.push_str(&format!("\n----\n{value_count} values hashing to {hash}"));
                }
            }
        }
        RecordKind::Control(control) => match control {
            ControlRecord::Halt => out.push_str("halt"),
            ControlRecord::SkipIf(sys) => out.push_str(&format!("skipif {sys}")),
            ControlRecord::OnlyIf(sys) => out.push_str(&format!("onlyif {sys}")),
            ControlRecord::HashThreshold(n) => out.push_str(&format!("hash-threshold {n}")),
            ControlRecord::Require(ext) => out.push_str(&format!("require {ext}")),
            ControlRecord::Load(path) => out.push_str(&format!("load {path}")),
            ControlRecord::Mode(flag) => out.push_str(&format!("mode {flag}")),
            ControlRecord::SetVariable { name, value } => {
                out.push_str(&format!("set {name} {value}"))
            }
            ControlRecord::Loop {
                var,
                start,
                end,
                body,
            } => {
                out.push_str(&format!("loop {var} {start} {end}\n"));
                for rec in body {
                    out.push('\n');
                    out.push_str(&serialize_record(rec)?);
                    out.push('\n');
                }
                out.push_str("\nendloop");
            }
            ControlRecord::ClientCommand(_) => {
                return Err(SerializeError::Unrepresentable {
                    line: record.line,
                    kind: "client-command",
                })
            }
        },
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, dialect: SltDialect) -> (TestScript, Vec<ParseDiagnostic>) {
        parse_slt(text.as_bytes(), dialect, "test.slt")
    }

    fn parse_clean(text: &str, dialect: SltDialect) -> TestScript {
        let (script, diags) = parse(text, dialect);
        assert!(
            diags.iter().all(|d| !d.is_error()),
            "unexpected parse errors: {diags:?}"
        );
        script
    }

    const TWO_STATEMENTS_ONE_QUERY: &str = "\
statement ok
CREATE TABLE t1(a INTEGER, b INTEGER)

statement ok
INSERT INTO t1 VALUES (1, 2), (3, 1), (2, 3)

query I rowsort
SELECT a FROM t1
----
1
2
3
";

    #[test]
    fn statements_then_query_with_values() {
        let script = parse_clean(TWO_STATEMENTS_ONE_QUERY, SltDialect::Sqlite);
        assert_eq!(script.records.len(), 3);
        match &script.records[0].kind {
            RecordKind::Statement(s) => {
                assert_eq!(s.expect, StatementExpect::Ok);
                assert!(s.sql.starts_with("CREATE TABLE"));
            }
            other => panic!("expected statement, got {other:?}"),
        }
        match &script.records[2].kind {
            RecordKind::Query(q) => {
                assert_eq!(q.types.to_string(), "I");
                assert_eq!(q.sort, SortMode::RowSort);
                assert_eq!(
                    q.expected,
                    Some(ExpectedResult::Values(vec![
                        "1".into(),
                        "2".into(),
                        "3".into()
                    ]))
                );
            }
            other => panic!("expected query, got {other:?}"),
        }
        assert_eq!(script.records[2].line, 7);
    }

    #[test]
    fn empty_file_parses_to_empty_script() {
        let (script, diags) = parse("", SltDialect::Sqlite);
        assert!(script.records.is_empty());
        assert!(diags.is_empty());
    }

    #[test]
    fn require_then_query_in_duckdb_dialect() {
        let script = parse_clean(
            "require sqlsmith\n\nquery I\nSELECT 1\n----\n1\n",
            SltDialect::Duckdb,
        );
        assert_eq!(script.records.len(), 2);
        assert_eq!(
            script.records[0].kind,
            RecordKind::Control(ControlRecord::Require("sqlsmith".into()))
        );
    }

    #[test]
    fn require_is_not_an_sqlite_directive() {
        let (_, diags) = parse("require sqlsmith\n", SltDialect::Sqlite);
        assert!(diags.iter().any(|d| d.is_error()));
    }

    #[test]
    fn skipif_attaches_to_next_record() {
        let script = parse_clean(
            "skipif mysql # not supported there\nquery I nosort\nSELECT 1\n----\n1\n",
            SltDialect::Sqlite,
        );
        assert_eq!(script.records.len(), 1);
        assert_eq!(
            script.records[0].conditions,
            vec![Condition {
                polarity: Polarity::SkipIf,
                system: "mysql".into()
            }]
        );
    }

    #[test]
    fn conditioned_halt_keeps_its_condition() {
        let script = parse_clean("onlyif mysql\nhalt\n", SltDialect::Sqlite);
        assert_eq!(script.records.len(), 1);
        assert_eq!(
            script.records[0].kind,
            RecordKind::Control(ControlRecord::Halt)
        );
        assert_eq!(script.records[0].conditions[0].polarity, Polarity::OnlyIf);
    }

    #[test]
    fn digest_expected_result() {
        let script = parse_clean(
            "query I rowsort\nSELECT a FROM t\n----\n30 values hashing to 3c13dee48d9356ae19af2515e05e6b54\n",
            SltDialect::Sqlite,
        );
        match &script.records[0].kind {
            RecordKind::Query(q) => assert_eq!(
                q.expected,
                Some(ExpectedResult::Digest {
                    value_count: 30,
                    hash: "3c13dee48d9356ae19af2515e05e6b54".into()
                })
            ),
            other => panic!("expected query, got {other:?}"),
        }
    }

    #[test]
    fn malformed_digest_line_is_an_error() {
        let (_, diags) = parse(
            "query I\nSELECT 1\n----\n30 values hashing to xyz\n",
            SltDialect::Sqlite,
        );
        assert!(diags.iter().any(|d| d.is_error()));
    }

    #[test]
    fn duckdb_rows_detected_by_tabs() {
        let script = parse_clean(
            "query II\nSELECT a, b FROM t\n----\n1\t2\n3\t4\n",
            SltDialect::Duckdb,
        );
        match &script.records[0].kind {
            RecordKind::Query(q) => assert_eq!(
                q.expected,
                Some(ExpectedResult::Rows(vec!["1\t2".into(), "3\t4".into()]))
            ),
            other => panic!("expected query, got {other:?}"),
        }
    }

    #[test]
    fn multi_column_value_wise_stays_value_wise() {
        let script = parse_clean(
            "query II\nSELECT a, b FROM t\n----\n1\n2\n3\n4\n",
            SltDialect::Duckdb,
        );
        match &script.records[0].kind {
            RecordKind::Query(q) => assert!(matches!(q.expected, Some(ExpectedResult::Values(_)))),
            other => panic!("expected query, got {other:?}"),
        }
    }

    #[test]
    fn statement_error_with_message_in_duckdb() {
        let script = parse_clean(
            "statement error\nSELECT * FROM missing\n----\ndoes not exist\n",
            SltDialect::Duckdb,
        );
        match &script.records[0].kind {
            RecordKind::Statement(s) => {
                assert_eq!(s.expect, StatementExpect::Error(Some("does not exist".into())))
            }
            other => panic!("expected statement, got {other:?}"),
        }
    }

    #[test]
    fn loop_bodies_nest() {
        let script = parse_clean(
            "loop i 0 3\n\nloop j 0 2\n\nstatement ok\nINSERT INTO t VALUES ($i, $j)\n\nendloop\n\nendloop\n",
            SltDialect::Duckdb,
        );
        assert_eq!(script.records.len(), 1);
        let RecordKind::Control(ControlRecord::Loop { var, start, end, body }) =
            &script.records[0].kind
        else {
            panic!("expected loop");
        };
        assert_eq!((var.as_str(), *start, *end), ("i", 0, 3));
        assert_eq!(body.len(), 1);
        assert!(matches!(
            body[0].kind,
            RecordKind::Control(ControlRecord::Loop { .. })
        ));
    }

    #[test]
    fn unterminated_loop_is_an_error() {
        let (_, diags) = parse("loop i 0 3\n\nstatement ok\nSELECT 1\n", SltDialect::Duckdb);
        assert!(diags.iter().any(|d| d.is_error()));
    }

    #[test]
    fn unknown_header_skips_only_that_block() {
        let (script, diags) = parse(
            "bogus directive\nmore garbage\n\nstatement ok\nSELECT 1\n",
            SltDialect::Sqlite,
        );
        assert_eq!(script.records.len(), 1);
        assert_eq!(diags.iter().filter(|d| d.is_error()).count(), 1);
    }

    #[test]
    fn query_without_separator_has_no_expected_result() {
        let script = parse_clean("query I\nSELECT 1\n", SltDialect::Duckdb);
        match &script.records[0].kind {
            RecordKind::Query(q) => assert_eq!(q.expected, None),
            other => panic!("expected query, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_record_equivalent() {
        for (text, dialect) in [
            (TWO_STATEMENTS_ONE_QUERY, SltDialect::Sqlite),
            (
                "hash-threshold 8\n\nonlyif sqlite\nstatement ok\nSELECT 1\n\nhalt\n",
                SltDialect::Sqlite,
            ),
            (
                "require json\n\nloop i 0 10\n\nstatement ok\nINSERT INTO t VALUES ($i)\n\nendloop\n\nmode skip\n\nset x 42\n\nload data/db.duckdb\n",
                SltDialect::Duckdb,
            ),
        ] {
            let script = parse_clean(text, dialect);
            let emitted = serialize_slt(&script).unwrap();
            let reparsed = parse_clean(&emitted, dialect);
            assert!(
                script.records_equivalent(&reparsed),
                "round trip diverged for {text:?}:\n{emitted}"
            );
        }
    }

    #[test]
    fn client_command_is_unrepresentable() {
        let mut script = TestScript::new("x", FormatDialect::SltSqlite);
        script.records.push(TestRecord::new(
            RecordKind::Control(ControlRecord::ClientCommand("\\dt".into())),
            1,
        ));
        assert!(matches!(
            serialize_slt(&script),
            Err(SerializeError::Unrepresentable { .. })
        ));
    }

    #[test]
    fn empty_script_serializes_to_empty_file() {
        let script = TestScript::new("x", FormatDialect::SltSqlite);
        assert_eq!(serialize_slt(&script).unwrap(), "");
    }
}
