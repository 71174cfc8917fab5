//! Script execution with full control-record semantics: conditions,
//! halt, require, loops, variables, hash thresholds, crash and hang
//! detection, plus suite-level aggregation and the cross-engine matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::canon::{canonicalize, compare, CanonicalResult, CompareOutcome, ComparePolicy, ResultShape};
use crate::exec::{open_session, ConnectionSpec, ExecFailure, ExecOutput, QueryTable, Session, SetupError};
use crate::ir::{
    ControlRecord, ExpectedResult, Polarity, QueryRecord, RecordKind, StatementExpect,
    StatementRecord, TestRecord, TestScript,
};
use crate::triage::{FailureKind, FailureRecord};

/// Knobs for one run: host identity, comparison policy, budgets, loop
/// bounds, variable bindings, and available extensions.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Engine identity used by skip-if / only-if conditions.
    pub host: String,
    pub compare: ComparePolicy,
    /// Overrides the spec's statement timeout when set.
    pub timeout: Option<Duration>,
    pub loop_cap: u32,
    pub bindings: BTreeMap<String, String>,
    pub extensions: BTreeSet<String>,
    pub stop_file_on_crash: bool,
    /// Per-file wall-clock budget guarding against hang cascades.
    pub file_budget: Duration,
    /// Cross-query label equality checking (off by default).
    pub check_labels: bool,
    pub jobs: usize,
}

impl RunOptions {
    pub fn new(host: &str) -> Self {
        RunOptions {
            host: normalize_host(host),
            compare: ComparePolicy::strict(),
            timeout: None,
            loop_cap: 1000,
            bindings: BTreeMap::new(),
            extensions: BTreeSet::new(),
            stop_file_on_crash: true,
            file_budget: Duration::from_secs(600),
            check_labels: false,
            jobs: 1,
        }
    }
}

/// Host tags follow the names found in SLT corpora.
pub fn normalize_host(tag: &str) -> String {
    let tag = tag.to_ascii_lowercase();
    match tag.as_str() {
        "psql" => "postgresql".to_string(),
        _ => tag,
    }
}

/// Per-record verdict plus the failure payload triage consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail { failure: FailureRecord },
    Skip { reason: String },
    Crash { failure: FailureRecord },
    Timeout { failure: FailureRecord },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub line: u32,
    pub seq: usize,
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptRun {
    pub outcomes: Vec<Outcome>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileReport {
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub setup_error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub outcomes: Vec<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: u64,
    pub executed: u64,
    pub passed: u64,
    pub failed: u64,
    pub skipped: u64,
    pub crashed: u64,
    pub timed_out: u64,
}

impl Counts {
    fn add(&mut self, outcome: &Outcome) {
        self.total += 1;
        match &outcome.verdict {
            Verdict::Pass => {
                self.passed += 1;
                self.executed += 1;
            }
            Verdict::Fail { .. } => {
                self.failed += 1;
                self.executed += 1;
            }
            Verdict::Skip { .. } => self.skipped += 1,
            Verdict::Crash { .. } => self.crashed += 1,
            Verdict::Timeout { .. } => self.timed_out += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub suite: String,
    pub host: String,
    pub totals: Counts,
    /// passed / executed; 0 when nothing executed.
    pub success_rate: f64,
    pub files: Vec<FileReport>,
}

impl RunReport {
    pub fn assemble(suite: &str, host: &str, files: Vec<FileReport>) -> Self {
        let mut totals = Counts::default();
        for file in &files {
            for outcome in &file.outcomes {
                totals.add(outcome);
            }
        }
        let success_rate = if totals.executed == 0 {
            0.0
        } else {
            totals.passed as f64 / totals.executed as f64
        };
        RunReport {
            suite: suite.to_string(),
            host: host.to_string(),
            totals,
            success_rate,
            files,
        }
    }

    /// All failure payloads (fail, crash, timeout) in report order.
    pub fn failure_records(&self) -> Vec<FailureRecord> {
        let mut out = Vec::new();
        for file in &self.files {
            for outcome in &file.outcomes {
                match &outcome.verdict {
                    Verdict::Fail { failure }
                    | Verdict::Crash { failure }
                    | Verdict::Timeout { failure } => out.push(failure.clone()),
                    _ => {}
                }
            }
        }
        out
    }

    /// Stable JSON. Timing is stripped unless asked for, so repeated runs
    /// of a deterministic executor emit byte-identical reports.
    pub fn to_json(&self, include_timing: bool) -> String {
        let mut report = self.clone();
        if !include_timing {
            for file in &mut report.files {
                file.duration_ms = None;
                for outcome in &mut file.outcomes {
                    outcome.duration_ms = None;
                }
            }
        }
        let mut json = serde_json::to_string_pretty(&report).expect("report serialization");
        json.push('\n');
        json
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Runs one script on a fresh session. Setup failures (no session at
/// all) are the caller's distinguished report entry.
pub fn run_script(
    script: &TestScript,
    spec: &ConnectionSpec,
    options: &RunOptions,
) -> Result<ScriptRun, SetupError> {
    run_script_in_suite(script, spec, options, script.dialect.as_str())
}

pub fn run_script_in_suite(
    script: &TestScript,
    spec: &ConnectionSpec,
    options: &RunOptions,
    suite: &str,
) -> Result<ScriptRun, SetupError> {
    let mut spec = spec.clone();
    if let Some(timeout) = options.timeout {
        spec.statement_timeout = timeout;
    }
    let session = open_session(&spec)?;
    let mut runner = FileRunner {
        spec,
        options,
        suite: suite.to_string(),
        script_path: script.source_path.clone(),
        session: Some(session),
        halted: false,
        require_missing: None,
        crashed: false,
        session_lost: None,
        threshold: 0,
        bindings: options.bindings.clone(),
        outcomes: Vec::new(),
        warnings: Vec::new(),
        seq: 0,
        started: Instant::now(),
        labels: HashMap::new(),
    };
    runner.process(&script.records);
    if let Some(mut session) = runner.session.take() {
        session.teardown();
    }
    Ok(ScriptRun {
        outcomes: runner.outcomes,
        warnings: runner.warnings,
    })
}

struct FileRunner<'a> {
    spec: ConnectionSpec,
    options: &'a RunOptions,
    suite: String,
    script_path: String,
    session: Option<Session>,
    halted: bool,
    require_missing: Option<String>,
    crashed: bool,
    /// Set when a session could not be reopened after timeout/crash.
    session_lost: Option<String>,
    threshold: u32,
    bindings: BTreeMap<String, String>,
    outcomes: Vec<Outcome>,
    warnings: Vec<String>,
    seq: usize,
    started: Instant,
    labels: HashMap<String, Vec<String>>,
}

impl<'a> FileRunner<'a> {
    fn process(&mut self, records: &[TestRecord]) {
        for record in records {
            self.process_record(record);
        }
    }

    fn process_record(&mut self, record: &TestRecord) {
        let start = Instant::now();
        if let Some(reason) = self.skip_reason(record) {
            self.push(record.line, Verdict::Skip { reason }, start);
            // A halt record activates even though it reports as skipped.
            if matches!(record.kind, RecordKind::Control(ControlRecord::Halt))
                && !self.halted
                && self.condition_skip(record).is_none()
            {
                self.halted = true;
            }
            return;
        }
        match &record.kind {
            RecordKind::Control(control) => self.run_control(record, control, start),
            RecordKind::Statement(stmt) => self.run_statement(record, stmt, start),
            RecordKind::Query(query) => self.run_query(record, query, start),
        }
    }

    /// Blanket skip reasons checked before any record runs, in priority
    /// order. Halt is handled here so the halt record itself counts as
    /// skipped.
    fn skip_reason(&self, record: &TestRecord) -> Option<String> {
        if self.started.elapsed() > self.options.file_budget {
            return Some("file-budget".into());
        }
        if self.crashed && self.options.stop_file_on_crash {
            return Some("crashed".into());
        }
        if let Some(message) = &self.session_lost {
            return Some(format!("session-unavailable: {message}"));
        }
        if self.halted {
            return Some("halt".into());
        }
        if let Some(ext) = &self.require_missing {
            return Some(format!("require:{ext}"));
        }
        if let Some(reason) = self.condition_skip(record) {
            return Some(reason);
        }
        if matches!(record.kind, RecordKind::Control(ControlRecord::Halt)) {
            return Some("halt".into());
        }
        None
    }

    fn condition_skip(&self, record: &TestRecord) -> Option<String> {
        for cond in &record.conditions {
            match cond.polarity {
                Polarity::SkipIf if cond.system == self.options.host => {
                    return Some(format!("skipif {}", cond.system));
                }
                Polarity::OnlyIf if cond.system != self.options.host => {
                    return Some(format!("onlyif {}", cond.system));
                }
                _ => {}
            }
        }
        None
    }

    fn push(&mut self, line: u32, verdict: Verdict, start: Instant) {
        self.outcomes.push(Outcome {
            line,
            seq: self.seq,
            verdict,
            duration_ms: Some(start.elapsed().as_millis() as u64),
        });
        self.seq += 1;
    }

    fn run_control(&mut self, record: &TestRecord, control: &ControlRecord, start: Instant) {
        match control {
            // Unconditional halts are caught by skip_reason; reaching here
            // means a conditional halt whose condition did not fire.
            ControlRecord::Halt => {
                self.halted = true;
                self.push(record.line, Verdict::Skip { reason: "halt".into() }, start);
            }
            ControlRecord::HashThreshold(n) => {
                self.threshold = *n;
                self.push(
                    record.line,
                    Verdict::Skip {
                        reason: "control:hash-threshold".into(),
                    },
                    start,
                );
            }
            ControlRecord::Require(ext) => {
                if self.options.extensions.contains(ext) {
                    self.push(
                        record.line,
                        Verdict::Skip {
                            reason: "control:require".into(),
                        },
                        start,
                    );
                } else {
                    self.require_missing = Some(ext.clone());
                    self.push(
                        record.line,
                        Verdict::Skip {
                            reason: format!("require:{ext}"),
                        },
                        start,
                    );
                }
            }
            ControlRecord::SetVariable { name, value } => {
                let value = self.substitute(value);
                self.bindings.insert(name.clone(), value);
                self.push(
                    record.line,
                    Verdict::Skip {
                        reason: "control:set".into(),
                    },
                    start,
                );
            }
            ControlRecord::Load(path) => {
                let resolved = self.substitute(path);
                let reason = if has_unresolved_placeholder(&resolved) {
                    "unresolved-path".to_string()
                } else {
                    "control:load".to_string()
                };
                self.push(record.line, Verdict::Skip { reason }, start);
            }
            ControlRecord::Mode(flag) => {
                self.warnings
                    .push(format!("line {}: mode {flag:?} recorded and ignored", record.line));
                self.push(
                    record.line,
                    Verdict::Skip {
                        reason: "control:mode".into(),
                    },
                    start,
                );
            }
            ControlRecord::SkipIf(_) | ControlRecord::OnlyIf(_) => {
                self.push(
                    record.line,
                    Verdict::Skip {
                        reason: "control:condition".into(),
                    },
                    start,
                );
            }
            ControlRecord::ClientCommand(_) => {
                self.push(
                    record.line,
                    Verdict::Skip {
                        reason: "client-command".into(),
                    },
                    start,
                );
            }
            ControlRecord::Loop {
                var,
                start: lo,
                end: hi,
                body,
            } => {
                self.push(
                    record.line,
                    Verdict::Skip {
                        reason: "control:loop".into(),
                    },
                    start,
                );
                let iterations = (hi - lo).max(0) as u64;
                let capped = iterations.min(self.options.loop_cap as u64);
                if capped < iterations {
                    self.warnings.push(format!(
                        "line {}: loop truncated to {capped} of {iterations} iterations by the expansion cap",
                        record.line
                    ));
                }
                let saved = self.bindings.get(var).cloned();
                for i in 0..capped as i64 {
                    self.bindings
                        .insert(var.clone(), (lo + i).to_string());
                    self.process(body);
                }
                match saved {
                    Some(value) => self.bindings.insert(var.clone(), value),
                    None => self.bindings.remove(var),
                };
            }
        }
    }

    fn substitute(&self, text: &str) -> String {
        substitute_bindings(text, &self.bindings)
    }

    fn exec(&mut self, sql: &str) -> Result<ExecOutput, ExecFailure> {
        let Some(session) = self.session.as_mut() else {
            return Err(ExecFailure::ConnectionLost);
        };
        let result = session.execute(sql);
        match &result {
            Err(ExecFailure::ConnectionLost) => {
                self.crashed = true;
                if !self.options.stop_file_on_crash {
                    self.recycle_session();
                }
            }
            Err(ExecFailure::Timeout) => self.recycle_session(),
            _ => {}
        }
        result
    }

    fn recycle_session(&mut self) {
        if let Some(mut session) = self.session.take() {
            session.teardown();
        }
        match open_session(&self.spec) {
            Ok(session) => self.session = Some(session),
            Err(e) => self.session_lost = Some(e.to_string()),
        }
    }

    fn failure(&self, record: &TestRecord, sql: &str, kind: FailureKind, expected: String, actual: String) -> FailureRecord {
        FailureRecord {
            suite: self.suite.clone(),
            host: self.options.host.clone(),
            script_path: self.script_path.clone(),
            line: record.line,
            sql: sql.to_string(),
            expected,
            actual,
            kind,
        }
    }

    fn run_statement(&mut self, record: &TestRecord, stmt: &StatementRecord, start: Instant) {
        let sql = self.substitute(&stmt.sql);
        let expected_summary = match &stmt.expect {
            StatementExpect::Ok => "statement ok".to_string(),
            StatementExpect::Error(None) => "statement error".to_string(),
            StatementExpect::Error(Some(m)) => format!("statement error containing {m:?}"),
        };
        let verdict = match self.exec(&sql) {
            Ok(_) => match &stmt.expect {
                StatementExpect::Ok => Verdict::Pass,
                StatementExpect::Error(_) => Verdict::Fail {
                    failure: self.failure(
                        record,
                        &sql,
                        FailureKind::StatusMismatch,
                        expected_summary,
                        "statement succeeded".into(),
                    ),
                },
            },
            Err(ExecFailure::EngineError(message)) => match &stmt.expect {
                StatementExpect::Error(None) => Verdict::Pass,
                StatementExpect::Error(Some(want)) if message.contains(want.as_str()) => {
                    Verdict::Pass
                }
                _ => Verdict::Fail {
                    failure: self.failure(
                        record,
                        &sql,
                        FailureKind::StatusMismatch,
                        expected_summary,
                        message,
                    ),
                },
            },
            Err(ExecFailure::ConnectionLost) => Verdict::Crash {
                failure: self
                    .failure(record, &sql, FailureKind::Crash, expected_summary, String::new()),
            },
            Err(ExecFailure::Timeout) => Verdict::Timeout {
                failure: self
                    .failure(record, &sql, FailureKind::Timeout, expected_summary, String::new()),
            },
        };
        self.push(record.line, verdict, start);
    }

    fn run_query(&mut self, record: &TestRecord, query: &QueryRecord, start: Instant) {
        let sql = self.substitute(&query.sql);
        let expected_summary = match &query.expected {
            None => "query ok".to_string(),
            Some(ExpectedResult::Digest { value_count, hash }) => {
                format!("{value_count} values hashing to {hash}")
            }
            Some(ExpectedResult::Values(lines)) | Some(ExpectedResult::Rows(lines)) => {
                lines.join("\n")
            }
        };
        let output = match self.exec(&sql) {
            Ok(output) => output,
            Err(ExecFailure::EngineError(message)) => {
                let failure = self.failure(
                    record,
                    &sql,
                    FailureKind::StatusMismatch,
                    expected_summary,
                    message,
                );
                self.push(record.line, Verdict::Fail { failure }, start);
                return;
            }
            Err(ExecFailure::ConnectionLost) => {
                let failure =
                    self.failure(record, &sql, FailureKind::Crash, expected_summary, String::new());
                self.push(record.line, Verdict::Crash { failure }, start);
                return;
            }
            Err(ExecFailure::Timeout) => {
                let failure = self.failure(
                    record,
                    &sql,
                    FailureKind::Timeout,
                    expected_summary,
                    String::new(),
                );
                self.push(record.line, Verdict::Timeout { failure }, start);
                return;
            }
        };
        let table = match output {
            ExecOutput::Table(table) => table,
            ExecOutput::NoResult => QueryTable::empty(query.types.len()),
        };
        let shape = match &query.expected {
            Some(ExpectedResult::Rows(_)) => ResultShape::RowWise,
            _ => ResultShape::ValueWise,
        };
        let canon = match canonicalize(&table, &query.types, query.sort, shape, &self.options.compare)
        {
            Ok(canon) => canon,
            Err(e) => {
                let failure = self.failure(
                    record,
                    &sql,
                    FailureKind::ResultMismatch,
                    expected_summary,
                    e.to_string(),
                );
                self.push(record.line, Verdict::Fail { failure }, start);
                return;
            }
        };
        let canon = crate::canon::digest(canon, self.active_threshold(&query.expected));
        if let Some(label_verdict) = self.check_label(record, query, &sql, &canon) {
            self.push(record.line, label_verdict, start);
            return;
        }
        let verdict = match &query.expected {
            None => Verdict::Pass,
            Some(expected) => match compare(expected, &canon, &self.options.compare) {
                CompareOutcome::Match => Verdict::Pass,
                CompareOutcome::Mismatch {
                    index,
                    expected: e,
                    actual: a,
                } => Verdict::Fail {
                    failure: self.failure(
                        record,
                        &sql,
                        FailureKind::ResultMismatch,
                        format!(
                            "value {index}: {}",
                            e.unwrap_or_else(|| "(absent)".into())
                        ),
                        format!(
                            "value {index}: {}",
                            a.unwrap_or_else(|| "(absent)".into())
                        ),
                    ),
                },
            },
        };
        self.push(record.line, verdict, start);
    }

    /// The digest threshold only matters when the expectation itself is a
    /// digest; value blocks in the corpus were generated under the same
    /// threshold they are compared with.
    fn active_threshold(&self, expected: &Option<ExpectedResult>) -> u32 {
        match expected {
            Some(ExpectedResult::Digest { .. }) => {
                if self.threshold > 0 {
                    self.threshold
                } else {
                    1
                }
            }
            _ => 0,
        }
    }

    fn check_label(
        &mut self,
        record: &TestRecord,
        query: &QueryRecord,
        sql: &str,
        canon: &CanonicalResult,
    ) -> Option<Verdict> {
        if !self.options.check_labels {
            return None;
        }
        let label = query.label.as_ref()?;
        match self.labels.get(label) {
            None => {
                self.labels.insert(label.clone(), canon.lines.clone());
                None
            }
            Some(prior) if prior == &canon.lines => None,
            Some(prior) => Some(Verdict::Fail {
                failure: self.failure(
                    record,
                    sql,
                    FailureKind::ResultMismatch,
                    format!("label {label}: {}", prior.join("\n")),
                    format!("label {label}: {}", canon.lines.join("\n")),
                ),
            }),
        }
    }
}

/// Textual `$name` / `${name}` substitution for names present in the
/// bindings map; everything else (dollar quoting, `$1` parameters) is
/// left alone.
pub fn substitute_bindings(text: &str, bindings: &BTreeMap<String, String>) -> String {
    if !text.contains('$') || bindings.is_empty() {
        return text.to_string();
    }
    let mut names: Vec<&str> = bindings.keys().map(String::as_str).collect();
    names.sort_by_key(|n| std::cmp::Reverse(n.len()));
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '$' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        // ${name}
        if chars.get(i + 1) == Some(&'{') {
            if let Some(close) = chars[i + 2..].iter().position(|&c| c == '}') {
                let name: String = chars[i + 2..i + 2 + close].iter().collect();
                if let Some(value) = bindings.get(&name) {
                    out.push_str(value);
                    i += close + 3;
                    continue;
                }
            }
            out.push('$');
            i += 1;
            continue;
        }
        // $name with a non-identifier boundary after it.
        let rest: String = chars[i + 1..].iter().collect();
        let mut replaced = false;
        for name in &names {
            if rest.starts_with(name) {
                let after = chars.get(i + 1 + name.chars().count());
                let boundary =
                    after.is_none_or(|c| !(c.is_alphanumeric() || *c == '_'));
                if boundary {
                    out.push_str(bindings.get(*name).unwrap());
                    i += 1 + name.chars().count();
                    replaced = true;
                    break;
                }
            }
        }
        if !replaced {
            out.push('$');
            i += 1;
        }
    }
    out
}

/// Placeholders that survive substitution make a Load path unresolved:
/// `$name`, `${name}`, or a DuckDB-style `__NAME__` marker.
fn has_unresolved_placeholder(path: &str) -> bool {
    if path.contains("${") {
        return true;
    }
    let chars: Vec<char> = path.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c == '$'
            && chars
                .get(i + 1)
                .is_some_and(|n| n.is_alphabetic() || *n == '_')
        {
            return true;
        }
    }
    let mut rest = path;
    while let Some(start) = rest.find("__") {
        let after = &rest[start + 2..];
        match after.find("__") {
            Some(end) => {
                let inner = &after[..end];
                if !inner.is_empty()
                    && inner
                        .chars()
                        .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
                {
                    return true;
                }
                rest = &after[end + 2..];
            }
            None => return false,
        }
    }
    false
}

/// One named suite: a set of scripts run and reported together.
#[derive(Debug, Clone)]
pub struct Suite {
    pub name: String,
    pub scripts: Vec<TestScript>,
}

/// Runs every file in its own session, in parallel up to
/// `options.jobs`, and aggregates the outcome log.
pub fn run_suite(
    suite_name: &str,
    scripts: &[TestScript],
    spec: &ConnectionSpec,
    options: &RunOptions,
) -> RunReport {
    let run_one = |script: &TestScript| -> FileReport {
        let start = Instant::now();
        match run_script_in_suite(script, spec, options, suite_name) {
            Ok(run) => FileReport {
                path: script.source_path.clone(),
                setup_error: None,
                warnings: run.warnings,
                outcomes: run.outcomes,
                duration_ms: Some(start.elapsed().as_millis() as u64),
            },
            Err(e) => FileReport {
                path: script.source_path.clone(),
                setup_error: Some(e.to_string()),
                warnings: Vec::new(),
                outcomes: Vec::new(),
                duration_ms: Some(start.elapsed().as_millis() as u64),
            },
        }
    };
    let files: Vec<FileReport> = if options.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .expect("worker pool");
        pool.install(|| {
            use rayon::prelude::*;
            scripts.par_iter().map(run_one).collect()
        })
    } else {
        scripts.iter().map(run_one).collect()
    };
    RunReport::assemble(suite_name, &options.host, files)
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixReport {
    pub hosts: Vec<String>,
    pub rows: Vec<MatrixRow>,
    /// Per (suite, host) full reports, indexed like `rows`.
    #[serde(skip)]
    pub reports: Vec<Vec<Option<RunReport>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixRow {
    pub suite: String,
    /// `None` marks an unavailable engine, distinct from a 0.0 rate.
    pub cells: Vec<Option<f64>>,
}

/// Runs every (suite, host) pair with the host tag set to the engine.
pub fn cross_matrix(
    suites: &[Suite],
    specs: &[ConnectionSpec],
    options: &RunOptions,
) -> MatrixReport {
    let hosts: Vec<String> = specs.iter().map(|s| normalize_host(&s.engine)).collect();
    let mut rows = Vec::with_capacity(suites.len());
    let mut reports = Vec::with_capacity(suites.len());
    for suite in suites {
        let mut cells = Vec::with_capacity(specs.len());
        let mut suite_reports = Vec::with_capacity(specs.len());
        for spec in specs {
            // Probe engine availability once; an unavailable engine is an
            // absent cell, not a zero.
            match open_session(spec) {
                Ok(mut session) => session.teardown(),
                Err(_) => {
                    cells.push(None);
                    suite_reports.push(None);
                    continue;
                }
            }
            let mut cell_options = options.clone();
            cell_options.host = normalize_host(&spec.engine);
            let report = run_suite(&suite.name, &suite.scripts, spec, &cell_options);
            cells.push(Some(report.success_rate));
            suite_reports.push(Some(report));
        }
        rows.push(MatrixRow {
            suite: suite.name.clone(),
            cells,
        });
        reports.push(suite_reports);
    }
    MatrixReport {
        hosts,
        rows,
        reports,
    }
}

/// CSV: header row of host tags, one row per suite; absent cells stay
/// empty.
pub fn matrix_csv(matrix: &MatrixReport) -> String {
    let mut out = String::from("suite");
    for host in &matrix.hosts {
        out.push(',');
        out.push_str(host);
    }
    out.push('\n');
    for row in &matrix.rows {
        out.push_str(&row.suite);
        for cell in &row.cells {
            out.push(',');
            if let Some(rate) = cell {
                out.push_str(&format!("{rate:.4}"));
            }
        }
        out.push('\n');
    }
    out
}
