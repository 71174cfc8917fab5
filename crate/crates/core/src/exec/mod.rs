//! Executor contract shared by every target DBMS, plus the session
//! registry and connection configuration.
//!
//! Adapters stay deliberately small: open a fresh database, execute one
//! statement at a time with typed results, tear down. Anything about
//! rendering or comparison lives in the canonicalizer, not here.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod duck;
pub mod mock;
#[cfg(feature = "postgres")]
pub mod pg;
pub mod sqlite;

pub const DEFAULT_STATEMENT_TIMEOUT: Duration = Duration::from_secs(10);

/// One typed result cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cell {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
    Boolean(bool),
}

/// A materialized tabular result. Every row holds exactly
/// `column_count` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTable {
    pub column_count: usize,
    pub rows: Vec<Vec<Cell>>,
}

impl QueryTable {
    pub fn new(column_count: usize, rows: Vec<Vec<Cell>>) -> Self {
        for row in &rows {
            assert_eq!(
                row.len(),
                column_count,
                "QueryTable row arity does not match column_count"
            );
        }
        QueryTable { column_count, rows }
    }

    pub fn empty(column_count: usize) -> Self {
        QueryTable {
            column_count,
            rows: Vec::new(),
        }
    }
}

/// Result of executing one statement.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecOutput {
    Table(QueryTable),
    NoResult,
}

/// Execution-level failure from the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecFailure {
    #[error("engine error: {0}")]
    EngineError(String),
    /// The engine terminated or the connection dropped mid-statement;
    /// the session is dead. A crash candidate.
    #[error("connection lost")]
    ConnectionLost,
    /// The statement exceeded its timeout budget. A hang candidate.
    #[error("statement timeout")]
    Timeout,
}

/// How to reach one engine: tag plus key-value parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSpec {
    pub engine: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
    #[serde(default = "default_timeout", with = "duration_secs")]
    pub statement_timeout: Duration,
}

fn default_timeout() -> Duration {
    DEFAULT_STATEMENT_TIMEOUT
}

mod duration_secs {
    use super::Duration;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        if secs <= 0.0 {
            return Err(serde::de::Error::custom("timeout must be > 0"));
        }
        Ok(Duration::from_secs_f64(secs))
    }
}

impl ConnectionSpec {
    pub fn new(engine: impl Into<String>) -> Self {
        ConnectionSpec {
            engine: engine.into(),
            parameters: BTreeMap::new(),
            statement_timeout: DEFAULT_STATEMENT_TIMEOUT,
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.parameters.insert(key.into(), value.into());
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.statement_timeout = timeout;
        self
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.parameters.get(key).map(String::as_str)
    }
}

/// A live single-threaded session bound to a fresh database.
///
/// Sessions may be moved between threads but never shared; one statement
/// executes at a time.
pub trait Executor: Send {
    fn engine(&self) -> &str;

    /// Executes exactly one statement, materializing any result rows with
    /// tagged types. Non-queries yield [`ExecOutput::NoResult`].
    fn execute(&mut self, sql: &str) -> Result<ExecOutput, ExecFailure>;

    /// Releases engine resources. Idempotent; tolerates dead sessions.
    fn teardown(&mut self);
}

pub type Session = Box<dyn Executor>;

/// Session establishment failure, distinct from [`ExecFailure`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SetupError {
    #[error("unknown engine tag {0:?}")]
    UnknownEngine(String),
    #[error("cannot connect to {engine}: {message}")]
    Connect { engine: String, message: String },
    #[error("bad connection configuration: {0}")]
    Config(String),
}

/// Opens a session bound to a fresh, empty database for the spec's engine.
pub fn open_session(spec: &ConnectionSpec) -> Result<Session, SetupError> {
    match spec.engine.as_str() {
        "sqlite" => Ok(Box::new(sqlite::SqliteExecutor::open(spec)?)),
        "duckdb" => Ok(Box::new(duck::DuckDbExecutor::open(spec)?)),
        "mock" => Ok(Box::new(mock::MockExecutor::open(spec)?)),
        #[cfg(feature = "postgres")]
        "postgresql" | "psql" => Ok(Box::new(pg::PostgresExecutor::open(spec)?)),
        other => Err(SetupError::UnknownEngine(other.to_string())),
    }
}

/// Loads engine connection specs from a TOML file keyed by engine tag:
///
/// ```toml
/// [sqlite]
/// path = ":memory:"
///
/// [postgresql]
/// host = "localhost"
/// port = "5432"
/// timeout_secs = "10"
/// ```
///
/// Environment variables of the form `SQLSUITE_<ENGINE>_<KEY>` override
/// file values, so server credentials can stay out of the file.
pub fn load_connection_config(path: &Path) -> Result<BTreeMap<String, ConnectionSpec>, SetupError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SetupError::Config(format!("{}: {e}", path.display())))?;
    parse_connection_config(&text)
}

pub fn parse_connection_config(text: &str) -> Result<BTreeMap<String, ConnectionSpec>, SetupError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| SetupError::Config(format!("invalid TOML: {e}")))?;
    let mut specs = BTreeMap::new();
    for (engine, value) in table {
        let section = value
            .as_table()
            .ok_or_else(|| SetupError::Config(format!("engine {engine:?}: expected a table")))?;
        let mut spec = ConnectionSpec::new(engine.clone());
        for (key, v) in section {
            let v = match v {
                toml::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            if key == "timeout_secs" {
                let secs: f64 = v
                    .parse()
                    .map_err(|_| SetupError::Config(format!("{engine}.timeout_secs: {v:?}")))?;
                if secs <= 0.0 {
                    return Err(SetupError::Config(format!(
                        "{engine}.timeout_secs must be > 0"
                    )));
                }
                spec.statement_timeout = Duration::from_secs_f64(secs);
            } else {
                spec.parameters.insert(key.clone(), v);
            }
        }
        apply_env_overrides(&mut spec);
        specs.insert(engine, spec);
    }
    Ok(specs)
}

fn apply_env_overrides(spec: &mut ConnectionSpec) {
    let prefix = format!("SQLSUITE_{}_", spec.engine.to_ascii_uppercase());
    for (key, value) in std::env::vars() {
        if let Some(param) = key.strip_prefix(&prefix) {
            spec.parameters
                .insert(param.to_ascii_lowercase(), value.clone());
        }
    }
}

impl fmt::Display for ExecOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExecOutput::NoResult => write!(f, "no result"),
            ExecOutput::Table(t) => {
                write!(f, "{} row(s) x {} column(s)", t.rows.len(), t.column_count)
            }
        }
    }
}
