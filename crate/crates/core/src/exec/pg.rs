//! PostgreSQL executor (behind the `postgres` feature). Each session
//! creates its own uniquely named database on the server and drops it on
//! teardown.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use postgres::{Client, NoTls, SimpleQueryMessage};

use super::{Cell, ConnectionSpec, ExecFailure, ExecOutput, Executor, QueryTable, SetupError};

static SESSION_COUNTER: AtomicU64 = AtomicU64::new(0);

pub struct PostgresExecutor {
    client: Option<Client>,
    admin_config: postgres::Config,
    pub database: String,
    timeout: Duration,
}

fn config_from(spec: &ConnectionSpec, database: &str) -> postgres::Config {
    let mut config = postgres::Config::new();
    config.host(spec.param("host").unwrap_or("localhost"));
    config.port(
        spec.param("port")
            .and_then(|p| p.parse().ok())
            .unwrap_or(5432),
    );
    config.user(spec.param("user").unwrap_or("postgres"));
    if let Some(password) = spec.param("password") {
        config.password(password);
    }
    config.dbname(database);
    config.connect_timeout(Duration::from_secs(10));
    config
}

fn connect_err(e: impl std::fmt::Display) -> SetupError {
    SetupError::Connect {
        engine: "postgresql".into(),
        message: e.to_string(),
    }
}

impl PostgresExecutor {
    pub fn open(spec: &ConnectionSpec) -> Result<Self, SetupError> {
        let maintenance = spec.param("database").unwrap_or("postgres").to_string();
        let admin_config = config_from(spec, &maintenance);
        let mut admin = admin_config.connect(NoTls).map_err(connect_err)?;
        let database = format!(
            "sqlsuite_{}_{}",
            std::process::id(),
            SESSION_COUNTER.fetch_add(1, Ordering::SeqCst)
        );
        admin
            .batch_execute(&format!("CREATE DATABASE {database}"))
            .map_err(connect_err)?;
        let mut client = config_from(spec, &database)
            .connect(NoTls)
            .map_err(connect_err)?;
        client
            .batch_execute(&format!(
                "SET statement_timeout = {}",
                spec.statement_timeout.as_millis()
            ))
            .map_err(connect_err)?;
        Ok(PostgresExecutor {
            client: Some(client),
            admin_config,
            database,
            timeout: spec.statement_timeout,
        })
    }
}

impl Executor for PostgresExecutor {
    fn engine(&self) -> &str {
        "postgresql"
    }

    fn execute(&mut self, sql: &str) -> Result<ExecOutput, ExecFailure> {
        let Some(client) = self.client.as_mut() else {
            return Err(ExecFailure::ConnectionLost);
        };
        let _ = self.timeout; // enforced server-side via statement_timeout
        match client.simple_query(sql) {
            Ok(messages) => {
                let mut rows: Vec<Vec<Cell>> = Vec::new();
                let mut column_count = 0usize;
                for message in messages {
                    if let SimpleQueryMessage::Row(row) = message {
                        column_count = column_count.max(row.len());
                        rows.push(
                            (0..row.len())
                                .map(|i| match row.get(i) {
                                    Some(text) => Cell::Text(text.to_string()),
                                    None => Cell::Null,
                                })
                                .collect(),
                        );
                    }
                }
                if column_count == 0 {
                    Ok(ExecOutput::NoResult)
                } else {
                    Ok(ExecOutput::Table(QueryTable::new(column_count, rows)))
                }
            }
            Err(e) => {
                if e.is_closed() {
                    self.client.take();
                    return Err(ExecFailure::ConnectionLost);
                }
                if let Some(code) = e.code() {
                    // 57014 = query_canceled (statement_timeout fired).
                    if code.code() == "57014" {
                        return Err(ExecFailure::Timeout);
                    }
                }
                Err(ExecFailure::EngineError(
                    e.as_db_error()
                        .map(|d| d.message().to_string())
                        .unwrap_or_else(|| e.to_string()),
                ))
            }
        }
    }

    fn teardown(&mut self) {
        self.client.take();
        if let Ok(mut admin) = self.admin_config.connect(NoTls) {
            let _ = admin.batch_execute(&format!(
                "DROP DATABASE IF EXISTS {} WITH (FORCE)",
                self.database
            ));
        }
    }
}

impl Drop for PostgresExecutor {
    fn drop(&mut self) {
        self.teardown();
    }
}
