//! Scripted executor for hermetic tests: replays (sql -> outcome) pairs
//! in order and panics on divergence, so a drifting test can never pass
//! silently.

use serde::{Deserialize, Serialize};

use super::{Cell, ConnectionSpec, ExecFailure, ExecOutput, Executor, QueryTable, SetupError};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub entries: Vec<MockEntry>,
    #[serde(default)]
    pub on_exhausted: ExhaustPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEntry {
    /// Exact SQL this entry answers; `None` matches any statement.
    #[serde(default)]
    pub sql: Option<String>,
    pub outcome: MockOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockOutcome {
    Ok,
    /// Rows of JSON scalars: null, bool, integer, float, or string.
    Table { rows: Vec<Vec<serde_json::Value>> },
    Error { message: String },
    Disconnect,
    Timeout,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExhaustPolicy {
    /// Panic when a statement arrives past the end of the script.
    #[default]
    FailLoudly,
    /// Answer Ok to everything past the end of the script.
    DefaultOk,
}

pub struct MockExecutor {
    script: MockScript,
    cursor: usize,
    dead: bool,
}

impl MockExecutor {
    pub fn new(script: MockScript) -> Self {
        MockExecutor {
            script,
            cursor: 0,
            dead: false,
        }
    }

    /// Opens from a spec: `script` names a JSON file, `script_json`
    /// carries inline JSON; with neither, the mock answers Ok forever.
    pub fn open(spec: &ConnectionSpec) -> Result<Self, SetupError> {
        let script = if let Some(path) = spec.param("script") {
            let text = std::fs::read_to_string(path).map_err(|e| SetupError::Connect {
                engine: "mock".into(),
                message: format!("{path}: {e}"),
            })?;
            parse_script(&text)?
        } else if let Some(json) = spec.param("script_json") {
            parse_script(json)?
        } else {
            MockScript {
                entries: Vec::new(),
                on_exhausted: ExhaustPolicy::DefaultOk,
            }
        };
        Ok(MockExecutor::new(script))
    }
}

fn parse_script(json: &str) -> Result<MockScript, SetupError> {
    serde_json::from_str(json).map_err(|e| SetupError::Connect {
        engine: "mock".into(),
        message: format!("invalid mock script: {e}"),
    })
}

fn value_to_cell(value: &serde_json::Value) -> Cell {
    match value {
        serde_json::Value::Null => Cell::Null,
        serde_json::Value::Bool(b) => Cell::Boolean(*b),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Cell::Integer(i)
            } else {
                Cell::Real(n.as_f64().unwrap_or(0.0))
            }
        }
        serde_json::Value::String(s) => Cell::Text(s.clone()),
        other => Cell::Text(other.to_string()),
    }
}

impl Executor for MockExecutor {
    fn engine(&self) -> &str {
        "mock"
    }

    fn execute(&mut self, sql: &str) -> Result<ExecOutput, ExecFailure> {
        if self.dead {
            return Err(ExecFailure::ConnectionLost);
        }
        let Some(entry) = self.script.entries.get(self.cursor) else {
            return match self.script.on_exhausted {
                ExhaustPolicy::DefaultOk => Ok(ExecOutput::NoResult),
                ExhaustPolicy::FailLoudly => panic!(
                    "mock executor exhausted after {} scripted statement(s); got {sql:?}",
                    self.script.entries.len()
                ),
            };
        };
        if let Some(expected) = &entry.sql {
            assert_eq!(
                expected, sql,
                "mock executor diverged at entry {}: scripted {expected:?}, got {sql:?}",
                self.cursor
            );
        }
        let outcome = entry.outcome.clone();
        self.cursor += 1;
        match outcome {
            MockOutcome::Ok => Ok(ExecOutput::NoResult),
            MockOutcome::Table { rows } => {
                let cells: Vec<Vec<Cell>> = rows
                    .iter()
                    .map(|row| row.iter().map(value_to_cell).collect())
                    .collect();
                let column_count = cells.first().map_or(0, Vec::len);
                Ok(ExecOutput::Table(QueryTable::new(column_count, cells)))
            }
            MockOutcome::Error { message } => Err(ExecFailure::EngineError(message)),
            MockOutcome::Disconnect => {
                self.dead = true;
                Err(ExecFailure::ConnectionLost)
            }
            MockOutcome::Timeout => Err(ExecFailure::Timeout),
        }
    }

    fn teardown(&mut self) {}
}
