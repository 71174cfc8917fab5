//! Embedded SQLite executor.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rusqlite::types::ValueRef;
use rusqlite::Connection;

use super::{Cell, ConnectionSpec, ExecFailure, ExecOutput, Executor, QueryTable, SetupError};

pub struct SqliteExecutor {
    conn: Option<Connection>,
    timeout: Duration,
    /// Keeps a temp-file database alive until teardown.
    _tempfile: Option<tempfile::NamedTempFile>,
}

impl SqliteExecutor {
    /// Opens a fresh database: in-memory by default, or a new temp file
    /// when `storage = "tempfile"`.
    pub fn open(spec: &ConnectionSpec) -> Result<Self, SetupError> {
        let connect_err = |e: rusqlite::Error| SetupError::Connect {
            engine: "sqlite".into(),
            message: e.to_string(),
        };
        let (conn, tempfile) = match spec.param("storage") {
            Some("tempfile") => {
                let file = tempfile::Builder::new()
                    .prefix("sqlsuite-sqlite-")
                    .suffix(".db")
                    .tempfile()
                    .map_err(|e| SetupError::Connect {
                        engine: "sqlite".into(),
                        message: e.to_string(),
                    })?;
                let conn = Connection::open(file.path()).map_err(connect_err)?;
                (conn, Some(file))
            }
            _ => (Connection::open_in_memory().map_err(connect_err)?, None),
        };
        Ok(SqliteExecutor {
            conn: Some(conn),
            timeout: spec.statement_timeout,
            _tempfile: tempfile,
        })
    }

    fn run(&self, conn: &Connection, sql: &str) -> Result<ExecOutput, rusqlite::Error> {
        let mut stmt = conn.prepare(sql)?;
        if stmt.column_count() == 0 {
            stmt.raw_execute()?;
            return Ok(ExecOutput::NoResult);
        }
        let column_count = stmt.column_count();
        let mut rows = stmt.query([])?;
        let mut table_rows = Vec::new();
        while let Some(row) = rows.next()? {
            let mut cells = Vec::with_capacity(column_count);
            for i in 0..column_count {
                cells.push(match row.get_ref(i)? {
                    ValueRef::Null => Cell::Null,
                    ValueRef::Integer(v) => Cell::Integer(v),
                    ValueRef::Real(v) => Cell::Real(v),
                    ValueRef::Text(v) => Cell::Text(String::from_utf8_lossy(v).into_owned()),
                    ValueRef::Blob(v) => Cell::Blob(v.to_vec()),
                });
            }
            table_rows.push(cells);
        }
        Ok(ExecOutput::Table(QueryTable::new(column_count, table_rows)))
    }
}

impl Executor for SqliteExecutor {
    fn engine(&self) -> &str {
        "sqlite"
    }

    fn execute(&mut self, sql: &str) -> Result<ExecOutput, ExecFailure> {
        let Some(conn) = self.conn.as_ref() else {
            return Err(ExecFailure::ConnectionLost);
        };
        let fired = Arc::new(AtomicBool::new(false));
        let deadline = Instant::now() + self.timeout;
        let flag = Arc::clone(&fired);
        conn.progress_handler(
            10_000,
            Some(move || {
                if Instant::now() >= deadline {
                    flag.store(true, Ordering::SeqCst);
                    true
                } else {
                    false
                }
            }),
        )
        .ok();
        let result = self.run(conn, sql);
        conn.progress_handler(0, None::<fn() -> bool>).ok();
        match result {
            Ok(output) => Ok(output),
            Err(_) if fired.load(Ordering::SeqCst) => {
                // Interrupted by the deadline watchdog: the statement was
                // cancelled but the in-memory session state is stale, so
                // callers recycle the session.
                Err(ExecFailure::Timeout)
            }
            Err(e) => Err(ExecFailure::EngineError(e.to_string())),
        }
    }

    fn teardown(&mut self) {
        self.conn.take();
        self._tempfile.take();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> SqliteExecutor {
        SqliteExecutor::open(&ConnectionSpec::new("sqlite")).unwrap()
    }

    #[test]
    fn fresh_session_has_empty_schema() {
        let mut s = session();
        match s.execute("SELECT name FROM sqlite_master").unwrap() {
            ExecOutput::Table(t) => assert!(t.rows.is_empty()),
            other => panic!("expected table, got {other:?}"),
        }
    }

    #[test]
    fn sessions_are_isolated() {
        let mut a = session();
        let mut b = session();
        a.execute("CREATE TABLE t(x INTEGER)").unwrap();
        assert!(matches!(
            b.execute("SELECT * FROM t"),
            Err(ExecFailure::EngineError(_))
        ));
    }

    #[test]
    fn typed_cells_come_back_tagged() {
        let mut s = session();
        match s
            .execute("SELECT 1, 1.5, 'x', NULL, x'01'")
            .unwrap()
        {
            ExecOutput::Table(t) => {
                assert_eq!(
                    t.rows[0],
                    vec![
                        Cell::Integer(1),
                        Cell::Real(1.5),
                        Cell::Text("x".into()),
                        Cell::Null,
                        Cell::Blob(vec![1]),
                    ]
                );
            }
            other => panic!("expected table, got {other:?}"),
        }
    }

    #[test]
    fn coalesce_stays_integer() {
        let mut s = session();
        match s.execute("SELECT COALESCE(1, 1.0)").unwrap() {
            ExecOutput::Table(t) => assert_eq!(t.rows[0][0], Cell::Integer(1)),
            other => panic!("expected table, got {other:?}"),
        }
    }

    #[test]
    fn invalid_keyword_is_an_engine_error() {
        let mut s = session();
        assert!(matches!(
            s.execute("SELEC 1"),
            Err(ExecFailure::EngineError(_))
        ));
    }

    #[test]
    fn non_queries_have_no_result() {
        let mut s = session();
        assert_eq!(
            s.execute("CREATE TABLE t(a INTEGER)").unwrap(),
            ExecOutput::NoResult
        );
        assert_eq!(
            s.execute("INSERT INTO t VALUES (1)").unwrap(),
            ExecOutput::NoResult
        );
    }

    #[test]
    fn teardown_is_idempotent_and_kills_the_session() {
        let mut s = session();
        s.teardown();
        s.teardown();
        assert_eq!(
            s.execute("SELECT 1").unwrap_err(),
            ExecFailure::ConnectionLost
        );
    }

    #[test]
    fn runaway_statement_times_out() {
        let spec = ConnectionSpec::new("sqlite").with_timeout(Duration::from_millis(200));
        let mut s = SqliteExecutor::open(&spec).unwrap();
        // A cross join of generated series large enough to outlive the
        // deadline on any machine.
        let result = s.execute(
            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c) \
             SELECT count(*) FROM c",
        );
        assert_eq!(result.unwrap_err(), ExecFailure::Timeout);
    }

    #[test]
    fn tempfile_storage_works_and_cleans_up() {
        let spec = ConnectionSpec::new("sqlite").with_param("storage", "tempfile");
        let mut s = SqliteExecutor::open(&spec).unwrap();
        s.execute("CREATE TABLE t(a INTEGER)").unwrap();
        let path = s._tempfile.as_ref().unwrap().path().to_path_buf();
        assert!(path.exists());
        s.teardown();
        assert!(!path.exists());
    }
}
