//! Property tests for the spec's stated invariants: ordering invariance,
//! digest soundness, approx monotonicity, render patterns, splitter
//! safety, and paren-stripping idempotence.

use proptest::prelude::*;

use sqlsuite_core::analyzer::classify_statement;
use sqlsuite_core::canon::{
    canonicalize, compare, hash_lines, render_cell, CanonicalResult, ComparePolicy, ResultShape,
};
use sqlsuite_core::exec::{Cell, QueryTable};
use sqlsuite_core::ir::{ColumnType, ExpectedResult, SortMode, TypeString};
use sqlsuite_core::parse::split::{split_statements, ChunkKind, SplitOptions};

fn cell_strategy() -> impl Strategy<Value = Cell> {
    prop_oneof![
        Just(Cell::Null),
        (-10_000i64..10_000).prop_map(Cell::Integer),
        (-1_000_000i64..1_000_000).prop_map(|n| Cell::Real(n as f64 / 64.0)),
        any::<bool>().prop_map(Cell::Boolean),
        "[a-z]{0,6}".prop_map(Cell::Text),
    ]
}

fn table_strategy() -> impl Strategy<Value = (QueryTable, TypeString)> {
    (1usize..5, 0usize..6).prop_flat_map(|(cols, rows)| {
        let types = proptest::collection::vec(
            prop_oneof![
                Just(ColumnType::Text),
                Just(ColumnType::Integer),
                Just(ColumnType::Real)
            ],
            cols,
        );
        let rows = proptest::collection::vec(
            proptest::collection::vec(cell_strategy(), cols),
            rows,
        );
        (types, rows).prop_map(move |(types, rows)| {
            (QueryTable::new(cols, rows), TypeString(types))
        })
    })
}

proptest! {
    // Ordering invariance: rowsort/valuesort outputs do not depend on
    // input row order.
    #[test]
    fn sorted_canonicalization_is_permutation_invariant(
        (table, types) in table_strategy(),
        indices in proptest::collection::vec(any::<usize>(), 0..8),
        sort in prop_oneof![Just(SortMode::RowSort), Just(SortMode::ValueSort)],
    ) {
        let policy = ComparePolicy::strict();
        let mut shuffled = table.rows.clone();
        // Deterministic pseudo-shuffle driven by the index vector.
        for (k, &i) in indices.iter().enumerate() {
            if !shuffled.is_empty() {
                let a = k % shuffled.len();
                let b = i % shuffled.len();
                shuffled.swap(a, b);
            }
        }
        let permuted = QueryTable::new(table.column_count, shuffled);
        let lhs = canonicalize(&table, &types, sort, ResultShape::ValueWise, &policy).unwrap();
        let rhs = canonicalize(&permuted, &types, sort, ResultShape::ValueWise, &policy).unwrap();
        prop_assert_eq!(lhs.lines, rhs.lines);
    }

    // Digest soundness at small scale: equal digests iff byte-equal
    // line sequences.
    #[test]
    fn digest_soundness(
        a in proptest::collection::vec("[ab]{0,2}", 0..4),
        b in proptest::collection::vec("[ab]{0,2}", 0..4),
    ) {
        let da = hash_lines(&a);
        let db = hash_lines(&b);
        prop_assert_eq!(a == b, da == db);
    }

    // Approx monotonicity: a match at tolerance t stays a match at any
    // larger tolerance.
    #[test]
    fn approx_monotonicity(
        expected in -5_000i64..5_000,
        delta in -500i64..500,
        t1 in 1u32..50,
        extra in 1u32..50,
    ) {
        let e = expected as f64 / 8.0;
        let a = e + delta as f64 / 64.0;
        let expected_lines = ExpectedResult::Values(vec![format!("{e:.3}")]);
        let actual = CanonicalResult {
            lines: vec![format!("{a:.3}")],
            shape: ResultShape::ValueWise,
            digest: None,
        };
        let t1 = t1 as f64 / 100.0;
        let t2 = (t1 + extra as f64 / 100.0).min(0.99);
        let at_t1 = compare(&expected_lines, &actual, &ComparePolicy::approx(t1)).is_match();
        let at_t2 = compare(&expected_lines, &actual, &ComparePolicy::approx(t2)).is_match();
        prop_assert!(!at_t1 || at_t2, "match at {t1} but not at larger {t2}");
    }

    // Rendered reals always look like -?digits.digits{3}.
    #[test]
    fn rendered_reals_have_three_fraction_digits(cell in cell_strategy()) {
        if matches!(cell, Cell::Blob(_)) {
            return Ok(());
        }
        let text = render_cell(&cell, ColumnType::Real, &ComparePolicy::strict()).unwrap();
        if text != "NULL" {
            let re = regex::Regex::new(r"^-?\d+\.\d{3}$").unwrap();
            prop_assert!(re.is_match(&text), "bad real rendering: {text}");
        }
    }

    // Splitter safety: injecting semicolons inside quoted strings never
    // changes the statement count.
    #[test]
    fn splitter_ignores_semicolons_in_strings(
        head in "[a-zA-Z ]{0,12}",
        inner in "[a-z ;]{0,10}",
        tail in "[a-zA-Z ]{0,12}",
        n in 1usize..4,
    ) {
        let clean = format!("SELECT '{head}' , 'X';\n");
        let script: String = clean.repeat(n);
        let base = split_statements(&script, SplitOptions::postgres())
            .into_iter()
            .filter(|c| c.kind == ChunkKind::Sql)
            .count();
        let injected_stmt = format!("SELECT '{head}{inner};{inner}' , 'X{tail}';\n");
        let injected: String = injected_stmt.repeat(n);
        let got = split_statements(&injected, SplitOptions::postgres())
            .into_iter()
            .filter(|c| c.kind == ChunkKind::Sql)
            .count();
        prop_assert_eq!(base, got);
    }

    // Paren-stripping idempotence for classification.
    #[test]
    fn classification_survives_paren_wrapping(
        head in prop_oneof![
            Just("SELECT 1"),
            Just("INSERT INTO t VALUES (1)"),
            Just("CREATE TABLE t(a int)"),
            Just("PRAGMA cache_size"),
            Just("UPDATE t SET a = 1"),
        ],
        depth in 1usize..5,
    ) {
        let mut wrapped = head.to_string();
        for _ in 0..depth {
            wrapped = format!("({wrapped})");
        }
        prop_assert_eq!(
            classify_statement(head).name(),
            classify_statement(&wrapped).name()
        );
    }
}
