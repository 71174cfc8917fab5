//! Embedded DuckDB executor.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use duckdb::types::ValueRef;
use duckdb::Connection;

use super::{Cell, ConnectionSpec, ExecFailure, ExecOutput, Executor, QueryTable, SetupError};

pub struct DuckDbExecutor {
    conn: Option<Connection>,
    timeout: Duration,
}

impl DuckDbExecutor {
    pub fn open(spec: &ConnectionSpec) -> Result<Self, SetupError> {
        let conn = Connection::open_in_memory().map_err(|e| SetupError::Connect {
            engine: "duckdb".into(),
            message: e.to_string(),
        })?;
        Ok(DuckDbExecutor {
            conn: Some(conn),
            timeout: spec.statement_timeout,
        })
    }

    fn run(conn: &Connection, sql: &str) -> Result<ExecOutput, duckdb::Error> {
        let mut stmt = conn.prepare(sql)?;
        let mut rows = stmt.query([])?;
        let column_count = rows.as_ref().map(|s| s.column_count()).unwrap_or(0);
        if column_count == 0 {
            return Ok(ExecOutput::NoResult);
        }
        let mut table_rows = Vec::new();
        while let Some(row) = rows.next()? {
            let mut cells = Vec::with_capacity(column_count);
            for i in 0..column_count {
                cells.push(cell_from(row.get_ref(i)?));
            }
            table_rows.push(cells);
        }
        Ok(ExecOutput::Table(QueryTable::new(column_count, table_rows)))
    }
}

fn cell_from(value: ValueRef<'_>) -> Cell {
    match value {
        ValueRef::Null => Cell::Null,
        ValueRef::Boolean(b) => Cell::Boolean(b),
        ValueRef::TinyInt(v) => Cell::Integer(v as i64),
        ValueRef::SmallInt(v) => Cell::Integer(v as i64),
        ValueRef::Int(v) => Cell::Integer(v as i64),
        ValueRef::BigInt(v) => Cell::Integer(v),
        ValueRef::HugeInt(v) => i64::try_from(v)
            .map(Cell::Integer)
            .unwrap_or_else(|_| Cell::Text(v.to_string())),
        ValueRef::UHugeInt(v) => i64::try_from(v)
            .map(Cell::Integer)
            .unwrap_or_else(|_| Cell::Text(v.to_string())),
        ValueRef::UTinyInt(v) => Cell::Integer(v as i64),
        ValueRef::USmallInt(v) => Cell::Integer(v as i64),
        ValueRef::UInt(v) => Cell::Integer(v as i64),
        ValueRef::UBigInt(v) => i64::try_from(v)
            .map(Cell::Integer)
            .unwrap_or_else(|_| Cell::Text(v.to_string())),
        ValueRef::Float(v) => Cell::Real(v as f64),
        ValueRef::Double(v) => Cell::Real(v),
        ValueRef::Decimal(d) => Cell::Real(d.to_string().parse().unwrap_or(0.0)),
        ValueRef::Text(v) => Cell::Text(String::from_utf8_lossy(v).into_owned()),
        ValueRef::Blob(v) | ValueRef::Geometry(v) => Cell::Blob(v.to_vec()),
        // Temporal and nested values surface as text; comparisons on them
        // are a triage finding, not something the adapter should hide.
        other => Cell::Text(format!("{other:?}")),
    }
}

impl Executor for DuckDbExecutor {
    fn engine(&self) -> &str {
        "duckdb"
    }

    fn execute(&mut self, sql: &str) -> Result<ExecOutput, ExecFailure> {
        let Some(conn) = self.conn.as_ref() else {
            return Err(ExecFailure::ConnectionLost);
        };
        // Deadline watchdog: DuckDB has no in-band progress callback, so a
        // helper thread interrupts the connection when the budget runs out.
        let fired = Arc::new(AtomicBool::new(false));
        let done = Arc::new((Mutex::new(false), Condvar::new()));
        let handle = conn.interrupt_handle();
        let watchdog = {
            let fired = Arc::clone(&fired);
            let done = Arc::clone(&done);
            let timeout = self.timeout;
            std::thread::spawn(move || {
                let (lock, cvar) = &*done;
                let guard = lock.lock().unwrap();
                let (guard, _) = cvar
                    .wait_timeout_while(guard, timeout, |finished| !*finished)
                    .unwrap();
                if !*guard {
                    fired.store(true, Ordering::SeqCst);
                    handle.interrupt();
                }
            })
        };
        let result = Self::run(conn, sql);
        {
            let (lock, cvar) = &*done;
            *lock.lock().unwrap() = true;
            cvar.notify_all();
        }
        watchdog.join().ok();
        match result {
            Ok(output) => Ok(output),
            Err(_) if fired.load(Ordering::SeqCst) => Err(ExecFailure::Timeout),
            Err(e) => Err(ExecFailure::EngineError(e.to_string())),
        }
    }

    fn teardown(&mut self) {
        self.conn.take();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> DuckDbExecutor {
        DuckDbExecutor::open(&ConnectionSpec::new("duckdb")).unwrap()
    }

    #[test]
    fn coalesce_promotes_to_real() {
        let mut s = session();
        match s.execute("SELECT COALESCE(1, 1.0)").unwrap() {
            ExecOutput::Table(t) => match t.rows[0][0] {
                Cell::Real(v) => assert_eq!(v, 1.0),
                ref other => panic!("expected real, got {other:?}"),
            },
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
    fn invalid_keyword_is_an_engine_error() {
        let mut s = session();
        assert!(matches!(
            s.execute("SELEC 1"),
            Err(ExecFailure::EngineError(_))
        ));
    }

    #[test]
    fn typed_cells_come_back_tagged() {
        let mut s = session();
        match s.execute("SELECT 1, 1.5, 'x', NULL, TRUE").unwrap() {
            ExecOutput::Table(t) => {
                assert_eq!(t.rows[0][0], Cell::Integer(1));
                assert_eq!(t.rows[0][1], Cell::Real(1.5));
                assert_eq!(t.rows[0][2], Cell::Text("x".into()));
                assert_eq!(t.rows[0][3], Cell::Null);
                assert_eq!(t.rows[0][4], Cell::Boolean(true));
            }
            other => panic!("expected table, got {other:?}"),
        }
    }

    #[test]
    fn runaway_statement_times_out() {
        let spec = ConnectionSpec::new("duckdb").with_timeout(Duration::from_millis(300));
        let mut s = DuckDbExecutor::open(&spec).unwrap();
        let result = s.execute(
            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c) \
             SELECT count(*) FROM c",
        );
        assert_eq!(result.unwrap_err(), ExecFailure::Timeout);
    }

    #[test]
    fn teardown_is_idempotent() {
        let mut s = session();
        s.teardown();
        s.teardown();
        assert_eq!(
            s.execute("SELECT 1").unwrap_err(),
            ExecFailure::ConnectionLost
        );
    }
}
