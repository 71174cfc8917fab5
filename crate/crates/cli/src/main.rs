//! Command-line front end: parse test files into the IR, compute corpus
//! statistics, run suites against engines, build the cross-engine
//! matrix, triage failures, and scan MySQL test files.
//!
//! Exit code 0 means the tool ran to completion, regardless of how many
//! test cases failed; the reports carry the verdicts. Nonzero exit codes
//! are tool errors only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sqlsuite_core::analyzer::{
    stats_types_csv, stats_where_csv, suite_stats, CompliancePolicy, SuiteStats,
};
use sqlsuite_core::canon::ComparePolicy;
use sqlsuite_core::exec::{load_connection_config, ConnectionSpec};
use sqlsuite_core::ir::FormatDialect;
use sqlsuite_core::parse::slt::SltDialect;
use sqlsuite_core::parse::{parse_pg_regression, parse_slt, scan_mysql_commands, ParseDiagnostic};
use sqlsuite_core::runner::{
    cross_matrix, matrix_csv, run_suite, RunOptions, RunReport, Suite,
};
use sqlsuite_core::triage::{
    load_ruleset, rule_coverage, sample_failures, triage_table, triage_table_csv, FailureRecord,
};
use sqlsuite_core::TestScript;

#[derive(Parser)]
#[command(name = "sqlsuite", version, about = "Unified SQL test-suite toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse test files into the unified IR and dump it as JSON.
    Parse(ParseArgs),
    /// Compute statement-type and predicate statistics over a corpus.
    Stats(StatsArgs),
    /// Run a suite against one engine and write a run report.
    Run(RunArgs),
    /// Run suites across engines and emit the success-rate matrix.
    Matrix(MatrixArgs),
    /// Classify a run report's failures with a ruleset.
    Triage(TriageArgs),
    /// Draw a seeded random sample from a run report's failures.
    Sample(SampleArgs),
    /// Inventory MySQL test-runner commands.
    ScanMysql(ScanMysqlArgs),
}

#[derive(Args)]
struct FormatArg {
    /// Input format: slt-sqlite, slt-duckdb, or pg-regression.
    #[arg(long, default_value = "slt-sqlite")]
    format: String,
}

impl FormatArg {
    fn dialect(&self) -> Result<FormatDialect> {
        FormatDialect::parse(&self.format)
            .with_context(|| format!("unknown format {:?}", self.format))
    }
}

#[derive(Args)]
struct ParseArgs {
    #[command(flatten)]
    format: FormatArg,
    /// Files or directories.
    paths: Vec<PathBuf>,
    /// Write the IR dump here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    format: FormatArg,
    paths: Vec<PathBuf>,
    /// Count CREATE INDEX as standard-compliant.
    #[arg(long)]
    create_index_standard: bool,
    /// Write the JSON stats here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write <base>_types.csv and <base>_where.csv.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EngineArgs {
    /// Engine tag (sqlite, duckdb, mock, postgresql with the feature).
    #[arg(long)]
    engine: String,
    /// Connection configuration file (TOML keyed by engine tag).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-statement timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

impl EngineArgs {
    fn spec(&self) -> Result<ConnectionSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let specs = load_connection_config(path)?;
                specs
                    .get(&self.engine)
                    .cloned()
                    .unwrap_or_else(|| ConnectionSpec::new(&self.engine))
            }
            None => ConnectionSpec::new(&self.engine),
        };
        if let Some(secs) = self.timeout {
            if secs <= 0.0 {
                bail!("--timeout must be > 0");
            }
            spec.statement_timeout = Duration::from_secs_f64(secs);
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    format: FormatArg,
    #[command(flatten)]
    engine: EngineArgs,
    paths: Vec<PathBuf>,
    /// Suite name used in the report (defaults to the first path stem).
    #[arg(long)]
    suite: Option<String>,
    /// Comparison mode: strict or approx:<relative tolerance>.
    #[arg(long, default_value = "strict")]
    compare: String,
    /// Host tag for skipif/onlyif (defaults to the engine tag).
    #[arg(long)]
    host_tag: Option<String>,
    /// Available extensions for `require` controls (repeatable).
    #[arg(long = "ext")]
    extensions: Vec<String>,
    /// Variable bindings name=value (repeatable).
    #[arg(long = "bind")]
    bindings: Vec<String>,
    /// Parallel worker count.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Include wall-clock timing in the JSON report.
    #[arg(long)]
    timing: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    format: FormatArg,
    /// Suite directories; each one becomes a matrix row.
    paths: Vec<PathBuf>,
    /// Engine tags (repeatable).
    #[arg(long = "engine", required = true)]
    engines: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, default_value = "strict")]
    compare: String,
    #[arg(long = "ext")]
    extensions: Vec<String>,
    #[arg(long = "bind")]
    bindings: Vec<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the CSV matrix here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TriageArgs {
    /// Run report JSON produced by `run`.
    #[arg(long)]
    report: PathBuf,
    /// Triage ruleset TOML.
    #[arg(long)]
    rules: PathBuf,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    report: PathBuf,
    /// Sample size.
    #[arg(short = 'n', long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanMysqlArgs {
    paths: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Parse(args) => cmd_parse(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Run(args) => cmd_run(args),
        Command::Matrix(args) => cmd_matrix(args),
        Command::Triage(args) => cmd_triage(args),
        Command::Sample(args) => cmd_sample(args),
        Command::ScanMysql(args) => cmd_scan_mysql(args),
    }
}

/// Collects test files under each path: `.test` and `.slt` for the SLT
/// dialects, `.sql` for regression suites (paired with `expected/<stem>.out`
/// or a sibling `<stem>.out`).
fn collect_files(paths: &[PathBuf], dialect: FormatDialect) -> Result<Vec<PathBuf>> {
    let extensions: &[&str] = match dialect {
        FormatDialect::SltSqlite | FormatDialect::SltDuckdb => &["test", "slt"],
        FormatDialect::PgRegression => &["sql"],
    };
    let mut files = Vec::new();
    for path in paths {
        if path.is_file() {
            files.push(path.clone());
            continue;
        }
        if !path.is_dir() {
            bail!("{}: no such file or directory", path.display());
        }
        for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
            let entry = entry?;
            if entry.file_type().is_file()
                && entry
                    .path()
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| extensions.contains(&e))
            {
                files.push(entry.into_path());
            }
        }
    }
    if files.is_empty() {
        bail!("no test files found under the given paths");
    }
    Ok(files)
}

fn expected_for(sql_path: &Path) -> Option<PathBuf> {
    let stem = sql_path.file_stem()?;
    let dir = sql_path.parent()?;
    let mut out = dir.join(stem);
    out.set_extension("out");
    if out.is_file() {
        return Some(out);
    }
    let sibling = dir.parent()?.join("expected").join(stem);
    let mut sibling = sibling;
    sibling.set_extension("out");
    sibling.is_file().then_some(sibling)
}

fn parse_corpus(
    paths: &[PathBuf],
    dialect: FormatDialect,
) -> Result<(Vec<TestScript>, Vec<(String, ParseDiagnostic)>)> {
    let files = collect_files(paths, dialect)?;
    let mut scripts = Vec::with_capacity(files.len());
    let mut diagnostics = Vec::new();
    for file in files {
        let bytes = fs::read(&file).with_context(|| file.display().to_string())?;
        let name = file.display().to_string();
        let (script, diags) = match dialect {
            FormatDialect::SltSqlite => parse_slt(&bytes, SltDialect::Sqlite, &name),
            FormatDialect::SltDuckdb => parse_slt(&bytes, SltDialect::Duckdb, &name),
            FormatDialect::PgRegression => {
                let expected = expected_for(&file)
                    .map(fs::read)
                    .transpose()
                    .with_context(|| file.display().to_string())?;
                parse_pg_regression(&bytes, expected.as_deref(), &name)
            }
        };
        diagnostics.extend(diags.into_iter().map(|d| (name.clone(), d)));
        scripts.push(script);
    }
    Ok((scripts, diagnostics))
}

fn report_diagnostics(diagnostics: &[(String, ParseDiagnostic)]) {
    for (file, diag) in diagnostics {
        eprintln!("{file}: {diag}");
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| path.display().to_string())?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_parse(args: ParseArgs) -> Result<()> {
    let dialect = args.format.dialect()?;
    let (scripts, diagnostics) = parse_corpus(&args.paths, dialect)?;
    report_diagnostics(&diagnostics);
    let mut json = serde_json::to_string_pretty(&scripts)?;
    json.push('\n');
    write_output(&args.out, &json)?;
    let errors = diagnostics.iter().filter(|(_, d)| d.is_error()).count();
    eprintln!(
        "parsed {} file(s), {} diagnostic(s) ({} error(s))",
        scripts.len(),
        diagnostics.len(),
        errors
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let dialect = args.format.dialect()?;
    let (scripts, diagnostics) = parse_corpus(&args.paths, dialect)?;
    report_diagnostics(&diagnostics);
    let mut policy = CompliancePolicy::default();
    policy.count_create_index_as_standard = args.create_index_standard;
    let stats: SuiteStats = suite_stats(&scripts, &policy);
    let mut json = serde_json::to_string_pretty(&stats)?;
    json.push('\n');
    write_output(&args.out, &json)?;
    if let Some(base) = &args.csv {
        let base_str = base.display().to_string();
        fs::write(format!("{base_str}_types.csv"), stats_types_csv(&stats))?;
        fs::write(format!("{base_str}_where.csv"), stats_where_csv(&stats))?;
    }
    Ok(())
}

fn parse_compare(text: &str) -> Result<ComparePolicy> {
    if text == "strict" {
        return Ok(ComparePolicy::strict());
    }
    if let Some(tol) = text.strip_prefix("approx:") {
        let tol: f64 = tol.parse().context("approx tolerance must be a number")?;
        if !(0.0..1.0).contains(&tol) || tol == 0.0 {
            bail!("approx tolerance must be in (0, 1)");
        }
        return Ok(ComparePolicy::approx(tol));
    }
    if text == "approx" {
        return Ok(ComparePolicy::approx(0.01));
    }
    bail!("unknown compare mode {text:?} (want strict or approx:<tol>)");
}

fn parse_bindings(pairs: &[String]) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (name, value) = pair
            .split_once('=')
            .with_context(|| format!("--bind {pair:?} is not name=value"))?;
        map.insert(name.to_string(), value.to_string());
    }
    Ok(map)
}

fn build_options(
    host: &str,
    compare: &str,
    extensions: &[String],
    bindings: &[String],
    jobs: usize,
) -> Result<RunOptions> {
    let mut options = RunOptions::new(host);
    options.compare = parse_compare(compare)?;
    options.extensions = extensions.iter().cloned().collect();
    options.bindings = parse_bindings(bindings)?;
    options.jobs = jobs.max(1);
    Ok(options)
}

fn print_run_summary(report: &RunReport) {
    let t = &report.totals;
    println!(
        "suite {} on {}: {} records | executed {} | passed {} | failed {} | skipped {} | crashed {} | timed out {} | success rate {:.2}%",
        report.suite,
        report.host,
        t.total,
        t.executed,
        t.passed,
        t.failed,
        t.skipped,
        t.crashed,
        t.timed_out,
        report.success_rate * 100.0
    );
    for file in &report.files {
        if let Some(error) = &file.setup_error {
            println!("  {}: setup error: {error}", file.path);
        }
        for warning in &file.warnings {
            println!("  {}: warning: {warning}", file.path);
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let dialect = args.format.dialect()?;
    let (scripts, diagnostics) = parse_corpus(&args.paths, dialect)?;
    report_diagnostics(&diagnostics);
    let spec = args.engine.spec()?;
    let host = args.host_tag.as_deref().unwrap_or(&args.engine.engine);
    let options = build_options(
        host,
        &args.compare,
        &args.extensions,
        &args.bindings,
        args.jobs,
    )?;
    let suite_name = args.suite.clone().unwrap_or_else(|| {
        args.paths
            .first()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "suite".into())
    });
    let report = run_suite(&suite_name, &scripts, &spec, &options);
    print_run_summary(&report);
    let json = report.to_json(args.timing);
    match &args.out {
        Some(path) => fs::write(path, &json).with_context(|| path.display().to_string())?,
        None => print!("{json}"),
    }
    Ok(())
}

fn cmd_matrix(args: MatrixArgs) -> Result<()> {
    let dialect = args.format.dialect()?;
    let mut suites = Vec::new();
    for path in &args.paths {
        let (scripts, diagnostics) = parse_corpus(std::slice::from_ref(path), dialect)?;
        report_diagnostics(&diagnostics);
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        suites.push(Suite { name, scripts });
    }
    let configs = match &args.config {
        Some(path) => load_connection_config(path)?,
        None => BTreeMap::new(),
    };
    let mut specs = Vec::new();
    for engine in &args.engines {
        let mut spec = configs
            .get(engine)
            .cloned()
            .unwrap_or_else(|| ConnectionSpec::new(engine));
        if let Some(secs) = args.timeout {
            spec.statement_timeout = Duration::from_secs_f64(secs);
        }
        specs.push(spec);
    }
    let options = build_options(
        "sqlite",
        &args.compare,
        &args.extensions,
        &args.bindings,
        args.jobs,
    )?;
    let matrix = cross_matrix(&suites, &specs, &options);
    let csv = matrix_csv(&matrix);
    write_output(&args.out, &csv)?;
    Ok(())
}

fn load_failures(report_path: &Path) -> Result<Vec<FailureRecord>> {
    let text = fs::read_to_string(report_path)
        .with_context(|| report_path.display().to_string())?;
    // Accept either a full run report or a bare failure list.
    if let Ok(report) = RunReport::from_json(&text) {
        return Ok(report.failure_records());
    }
    serde_json::from_str(&text).context("input is neither a run report nor a failure list")
}

fn cmd_triage(args: TriageArgs) -> Result<()> {
    let failures = load_failures(&args.report)?;
    let ruleset = load_ruleset(
        &fs::read_to_string(&args.rules).with_context(|| args.rules.display().to_string())?,
    )?;
    let table = triage_table(&failures, &ruleset.rules);
    let coverage = rule_coverage(&failures, &ruleset.rules);
    eprintln!(
        "{} failure(s), {:.1}% classified, {} unclassified",
        failures.len(),
        coverage.classified_fraction * 100.0,
        coverage.unclassified.len()
    );
    let content = match args.format.as_str() {
        "csv" => triage_table_csv(&table),
        "json" => {
            let mut json = serde_json::to_string_pretty(&serde_json::json!({
                "table": table,
                "classified_fraction": coverage.classified_fraction,
                "unclassified": coverage.unclassified,
            }))?;
            json.push('\n');
            json
        }
        other => bail!("unknown output format {other:?} (want csv or json)"),
    };
    write_output(&args.out, &content)?;
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let failures = load_failures(&args.report)?;
    let sample = sample_failures(&failures, args.count, args.seed);
    let mut json = serde_json::to_string_pretty(&sample)?;
    json.push('\n');
    write_output(&args.out, &json)?;
    eprintln!("sampled {} of {} failure(s)", sample.len(), failures.len());
    Ok(())
}

fn cmd_scan_mysql(args: ScanMysqlArgs) -> Result<()> {
    let mut files = Vec::new();
    for path in &args.paths {
        if path.is_file() {
            files.push(path.clone());
        } else if path.is_dir() {
            for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
                let entry = entry?;
                if entry.file_type().is_file()
                    && entry.path().extension().is_some_and(|e| e == "test")
                {
                    files.push(entry.into_path());
                }
            }
        } else {
            bail!("{}: no such file or directory", path.display());
        }
    }
    if files.is_empty() {
        bail!("no .test files found");
    }
    let mut inventory = sqlsuite_core::parse::CommandInventory::default();
    for file in &files {
        let bytes = fs::read(file).with_context(|| file.display().to_string())?;
        inventory.merge(&scan_mysql_commands(&bytes));
    }
    let mut json = serde_json::to_string_pretty(&inventory)?;
    json.push('\n');
    write_output(&args.out, &json)?;
    eprintln!(
        "{} file(s): {} distinct command(s), {} total occurrence(s)",
        files.len(),
        inventory.distinct_count,
        inventory.total()
    );
    Ok(())
}
