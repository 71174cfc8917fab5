//! Unified SQL test-suite toolchain.
//!
//! Heterogeneous DBMS test formats (sqllogictest and its DuckDB dialect,
//! PostgreSQL regression suites, plus a MySQL command scanner) are
//! lowered into one intermediate representation, executed against
//! multiple engines under a common executor contract, compared after
//! canonicalization, and triaged into failure taxonomies.
//!
//! ```no_run
//! use sqlsuite_core::exec::ConnectionSpec;
//! use sqlsuite_core::parse::slt::{parse_slt, SltDialect};
//! use sqlsuite_core::runner::{run_script, RunOptions};
//!
//! let text = std::fs::read("select1.test").unwrap();
//! let (script, diagnostics) = parse_slt(&text, SltDialect::Sqlite, "select1.test");
//! assert!(diagnostics.iter().all(|d| !d.is_error()));
//! let run = run_script(&script, &ConnectionSpec::new("sqlite"), &RunOptions::new("sqlite")).unwrap();
//! println!("{} outcomes", run.outcomes.len());
//! ```

pub mod analyzer;
pub mod canon;
pub mod exec;
pub mod ir;
pub mod parse;
pub mod runner;
pub mod triage;

pub use ir::{validate_script, FormatDialect, TestRecord, TestScript};
pub use parse::{parse_pg_regression, parse_slt, scan_mysql_commands, serialize_slt};
pub use runner::{cross_matrix, run_script, run_suite, RunOptions, RunReport};
