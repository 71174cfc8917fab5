//! Fixture-driven parser checks: the bundled PostgreSQL pairs and MySQL
//! files, plus parse totality over every bundled corpus.

use std::path::{Path, PathBuf};

use sqlsuite_core::ir::{
    ControlRecord, ExpectedResult, RecordKind, StatementExpect,
};
use sqlsuite_core::parse::slt::{parse_slt, SltDialect};
use sqlsuite_core::parse::{parse_pg_regression, scan_mysql_commands};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .unwrap()
}

fn pg_pair(stem: &str) -> (Vec<u8>, Option<Vec<u8>>) {
    let sql = std::fs::read(fixtures().join(format!("pg/sql/{stem}.sql"))).unwrap();
    let expected = std::fs::read(fixtures().join(format!("pg/expected/{stem}.out"))).ok();
    (sql, expected)
}

#[test]
fn pg_basic_pair_aligns_tables_and_errors() {
    let (sql, expected) = pg_pair("basic");
    let (script, diags) = parse_pg_regression(&sql, expected.as_deref(), "basic.sql");
    assert!(diags.iter().all(|d| !d.is_error()), "{diags:?}");

    let kinds: Vec<&RecordKind> = script.records.iter().map(|r| &r.kind).collect();
    // CREATE, INSERT, INSERT, SELECT(table), SELECT 1/0(error), \d meta,
    // SELECT count (table).
    assert_eq!(kinds.len(), 7);
    assert!(matches!(kinds[0], RecordKind::Statement(_)));
    match kinds[3] {
        RecordKind::Query(q) => {
            assert_eq!(q.types.len(), 2);
            assert_eq!(
                q.expected,
                Some(ExpectedResult::Rows(vec!["1\tx".into(), "2\ty".into()]))
            );
        }
        other => panic!("expected query, got {other:?}"),
    }
    match kinds[4] {
        RecordKind::Statement(s) => assert_eq!(
            s.expect,
            StatementExpect::Error(Some("division by zero".into()))
        ),
        other => panic!("expected error statement, got {other:?}"),
    }
    match kinds[5] {
        RecordKind::Control(ControlRecord::ClientCommand(raw)) => {
            assert_eq!(raw, "\\d pgt")
        }
        other => panic!("expected client command, got {other:?}"),
    }
    match kinds[6] {
        RecordKind::Query(q) => {
            assert_eq!(q.expected, Some(ExpectedResult::Rows(vec!["2".into()])));
        }
        other => panic!("expected query, got {other:?}"),
    }
}

#[test]
fn pg_multiline_statement_aligns() {
    let (sql, expected) = pg_pair("multiline");
    let (script, diags) = parse_pg_regression(&sql, expected.as_deref(), "multiline.sql");
    assert!(diags.iter().all(|d| !d.is_error()), "{diags:?}");
    assert_eq!(script.records.len(), 3);
    match &script.records[2].kind {
        RecordKind::Query(q) => {
            assert_eq!(
                q.expected,
                Some(ExpectedResult::Rows(vec!["10".into(), "20".into()]))
            );
        }
        other => panic!("expected query, got {other:?}"),
    }
}

#[test]
fn pg_drifted_statement_is_unaligned_with_warning() {
    let (sql, expected) = pg_pair("partial");
    let (script, diags) = parse_pg_regression(&sql, expected.as_deref(), "partial.sql");
    assert!(diags.iter().all(|d| !d.is_error()));
    assert!(diags.iter().any(|d| d.message.contains("unaligned")));
    let drifted = &script.records[2];
    assert!(drifted.tags.contains(&"unaligned".to_string()));
    assert_eq!(script.metadata.get("unaligned").map(String::as_str), Some("1"));
}

#[test]
fn pg_client_variables_are_flagged_not_interpolated() {
    let (sql, _) = pg_pair("vars");
    let (script, diags) = parse_pg_regression(&sql, None, "vars.sql");
    assert!(diags.iter().all(|d| !d.is_error()));
    assert!(matches!(
        script.records[0].kind,
        RecordKind::Control(ControlRecord::ClientCommand(_))
    ));
    let create = &script.records[1];
    assert!(create.tags.contains(&"client-var".to_string()));
    match &create.kind {
        RecordKind::Statement(s) => assert!(s.sql.contains(":'regresslib'")),
        other => panic!("expected statement, got {other:?}"),
    }
}

#[test]
fn pg_splitter_file_yields_expected_statement_count() {
    let sql = std::fs::read(fixtures().join("pg/sql/splitter.sql")).unwrap();
    let (script, diags) = parse_pg_regression(&sql, None, "splitter.sql");
    assert!(diags.iter().all(|d| !d.is_error()));
    // Dollar-quoted function, two string-bearing selects, one behind a
    // nested block comment.
    assert_eq!(script.records.len(), 4);
    match &script.records[0].kind {
        RecordKind::Statement(s) => assert!(s.sql.contains("$fn$")),
        other => panic!("expected statement, got {other:?}"),
    }
}

#[test]
fn parse_totality_over_all_bundled_corpora() {
    // Every bundled fixture parses with zero error diagnostics.
    for (dir, dialect) in [
        ("slt", SltDialect::Sqlite),
        ("duckdb", SltDialect::Duckdb),
        ("semantic", SltDialect::Sqlite),
    ] {
        let dir = fixtures().join(dir);
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_none_or(|e| e != "test") {
                continue;
            }
            let bytes = std::fs::read(&path).unwrap();
            let (script, diags) = parse_slt(&bytes, dialect, &path.display().to_string());
            assert!(
                diags.iter().all(|d| !d.is_error()),
                "{}: {diags:?}",
                path.display()
            );
            assert!(
                sqlsuite_core::validate_script(&script).is_empty(),
                "{}: invariant violations",
                path.display()
            );
        }
    }
    for stem in ["basic", "multiline", "partial", "vars", "splitter"] {
        let (sql, expected) = pg_pair(stem);
        let (_, diags) = parse_pg_regression(&sql, expected.as_deref(), stem);
        assert!(diags.iter().all(|d| !d.is_error()), "{stem}: {diags:?}");
    }
}

#[test]
fn mysql_fixture_inventories() {
    let basic = scan_mysql_commands(&std::fs::read(fixtures().join("mysql/basic.test")).unwrap());
    assert_eq!(basic.histogram.get("let"), Some(&1));
    assert_eq!(basic.distinct_count, 1);

    let commands =
        scan_mysql_commands(&std::fs::read(fixtures().join("mysql/commands.test")).unwrap());
    assert_eq!(commands.histogram.get("exec"), Some(&2));
    assert_eq!(commands.histogram.get("writefile"), Some(&1));
    assert_eq!(commands.histogram.get("let"), Some(&2));
    assert!(commands.histogram.get("create").is_none());
}
