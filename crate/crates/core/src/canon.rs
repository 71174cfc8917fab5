//! Canonical rendering, ordering, digesting, and comparison of query
//! results.
//!
//! Typed cells are rendered under the declared column type, rows are
//! normalized by the record's sort mode, long value-wise blocks can be
//! replaced by a count-plus-hash digest, and expected vs actual output is
//! compared under a strict or tolerant policy.

use md5::{Digest as _, Md5};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{Cell, QueryTable};
use crate::ir::{ColumnType, ExpectedResult, SortMode, TypeString};

/// Output shape of a canonical result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResultShape {
    /// One rendered value per line, row-major.
    ValueWise,
    /// One row per line, values tab-joined.
    RowWise,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultDigest {
    pub value_count: u64,
    pub hash: String,
}

/// The normalized text form of a result, ready for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalResult {
    pub lines: Vec<String>,
    pub shape: ResultShape,
    /// Present iff the lines were digested away.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<ResultDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparePolicy {
    pub mode: CompareMode,
    pub null_text: String,
    pub empty_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    Strict,
    /// Real-valued tokens match when |a - e| <= tolerance * max(|e|, 1).
    Approx { relative_tolerance: f64 },
}

impl Default for ComparePolicy {
    fn default() -> Self {
        ComparePolicy {
            mode: CompareMode::Strict,
            null_text: "NULL".into(),
            empty_text: "(empty)".into(),
        }
    }
}

impl ComparePolicy {
    pub fn strict() -> Self {
        ComparePolicy::default()
    }

    /// The documented leniency is 1%; kept off unless asked for.
    pub fn approx(relative_tolerance: f64) -> Self {
        ComparePolicy {
            mode: CompareMode::Approx { relative_tolerance },
            ..ComparePolicy::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    #[error("result has {actual} column(s) but the type string declares {declared}")]
    ArityMismatch { declared: usize, actual: usize },
    #[error("blob cell at row {row}, column {column} cannot render under a numeric type")]
    BlobRender { row: usize, column: usize },
}

/// Renders one cell under its declared column type.
///
/// Blob cells are unrepresentable under I and R and surface as a
/// rendering error, which callers record as a value-level mismatch.
pub fn render_cell(cell: &Cell, declared: ColumnType, policy: &ComparePolicy) -> Result<String, BlobUnderNumeric> {
    if let Cell::Null = cell {
        return Ok(policy.null_text.clone());
    }
    match declared {
        ColumnType::Integer => match cell {
            Cell::Integer(i) => Ok(i.to_string()),
            Cell::Boolean(b) => Ok(if *b { "1" } else { "0" }.to_string()),
            Cell::Real(f) => Ok(truncate_to_integer(*f)),
            Cell::Text(s) => Ok(text_as_integer(s)),
            Cell::Blob(_) => Err(BlobUnderNumeric),
            Cell::Null => unreachable!(),
        },
        ColumnType::Real => match cell {
            Cell::Integer(i) => Ok(format!("{i}.000")),
            Cell::Real(f) => Ok(format_real(*f)),
            Cell::Boolean(b) => Ok(if *b { "1.000" } else { "0.000" }.to_string()),
            Cell::Text(s) => Ok(format_real(s.trim().parse::<f64>().unwrap_or(0.0))),
            Cell::Blob(_) => Err(BlobUnderNumeric),
            Cell::Null => unreachable!(),
        },
        ColumnType::Text => {
            let text = match cell {
                Cell::Text(s) => s.clone(),
                Cell::Integer(i) => i.to_string(),
                Cell::Real(f) => render_real_as_text(*f),
                Cell::Boolean(b) => if *b { "1" } else { "0" }.to_string(),
                Cell::Blob(b) => String::from_utf8_lossy(b).into_owned(),
                Cell::Null => unreachable!(),
            };
            if text.is_empty() {
                Ok(policy.empty_text.clone())
            } else {
                Ok(text)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlobUnderNumeric;

fn truncate_to_integer(f: f64) -> String {
    if !f.is_finite() {
        return "0".to_string();
    }
    let t = f.trunc();
    if t.abs() < 9.0e18 {
        (t as i64).to_string()
    } else {
        format!("{t:.0}")
    }
}

fn text_as_integer(s: &str) -> String {
    let s = s.trim();
    if let Ok(i) = s.parse::<i64>() {
        return i.to_string();
    }
    if let Ok(f) = s.parse::<f64>() {
        return truncate_to_integer(f);
    }
    "0".to_string()
}

fn format_real(f: f64) -> String {
    if f.is_finite() {
        format!("{f:.3}")
    } else {
        "0.000".to_string()
    }
}

fn render_real_as_text(f: f64) -> String {
    if f.is_finite() && f.fract() == 0.0 && f.abs() < 1.0e15 {
        format!("{f:.1}")
    } else {
        format!("{f}")
    }
}

/// Renders a table under its declared types, applies the sort mode, and
/// lays the result out in the requested shape.
pub fn canonicalize(
    table: &QueryTable,
    types: &TypeString,
    sort: SortMode,
    shape: ResultShape,
    policy: &ComparePolicy,
) -> Result<CanonicalResult, CanonError> {
    if table.column_count != types.len() {
        return Err(CanonError::ArityMismatch {
            declared: types.len(),
            actual: table.column_count,
        });
    }

    let mut rendered: Vec<Vec<String>> = Vec::with_capacity(table.rows.len());
    for (r, row) in table.rows.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (c, cell) in row.iter().enumerate() {
            match render_cell(cell, types.0[c], policy) {
                Ok(text) => out.push(text),
                Err(BlobUnderNumeric) => {
                    return Err(CanonError::BlobRender { row: r, column: c })
                }
            }
        }
        rendered.push(out);
    }

    let lines = match sort {
        SortMode::NoSort => layout(rendered, shape),
        SortMode::RowSort => {
            rendered.sort_by(|a, b| a.join("\t").cmp(&b.join("\t")));
            layout(rendered, shape)
        }
        SortMode::ValueSort => {
            let mut values: Vec<String> = rendered.into_iter().flatten().collect();
            values.sort();
            match shape {
                ResultShape::ValueWise => values,
                ResultShape::RowWise => {
                    if table.column_count == 0 {
                        Vec::new()
                    } else {
                        values
                            .chunks(table.column_count)
                            .map(|chunk| chunk.join("\t"))
                            .collect()
                    }
                }
            }
        }
    };

    Ok(CanonicalResult {
        lines,
        shape,
        digest: None,
    })
}

fn layout(rows: Vec<Vec<String>>, shape: ResultShape) -> Vec<String> {
    match shape {
        ResultShape::ValueWise => rows.into_iter().flatten().collect(),
        ResultShape::RowWise => rows.into_iter().map(|r| r.join("\t")).collect(),
    }
}

/// Replaces a long value-wise block with its count and hash.
///
/// A threshold of 0 disables digesting; results at or below the threshold
/// pass through unchanged.
pub fn digest(result: CanonicalResult, threshold: u32) -> CanonicalResult {
    if result.shape != ResultShape::ValueWise
        || threshold == 0
        || result.lines.len() <= threshold as usize
    {
        return result;
    }
    let d = hash_lines(&result.lines);
    CanonicalResult {
        lines: Vec::new(),
        shape: result.shape,
        digest: Some(d),
    }
}

/// MD5 of the newline-joined lines plus a trailing newline, as the SLT
/// corpus hashes its value blocks.
pub fn hash_lines(lines: &[String]) -> ResultDigest {
    let mut hasher = Md5::new();
    for line in lines {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    ResultDigest {
        value_count: lines.len() as u64,
        hash: format!("{:x}", hasher.finalize()),
    }
}

/// Outcome of comparing expected vs actual.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompareOutcome {
    Match,
    Mismatch {
        /// First divergent line index.
        index: usize,
        expected: Option<String>,
        actual: Option<String>,
    },
}

impl CompareOutcome {
    pub fn is_match(&self) -> bool {
        matches!(self, CompareOutcome::Match)
    }
}

/// Compares an expected result against a canonical actual result.
///
/// Digest expectations compare on (value count, hash) against the actual
/// digest, computing it from the lines when the actual was not digested.
pub fn compare(
    expected: &ExpectedResult,
    actual: &CanonicalResult,
    policy: &ComparePolicy,
) -> CompareOutcome {
    match expected {
        ExpectedResult::Digest { value_count, hash } => {
            let got = match &actual.digest {
                Some(d) => d.clone(),
                None => hash_lines(&actual.lines),
            };
            if got.value_count == *value_count && got.hash == *hash {
                CompareOutcome::Match
            } else {
                CompareOutcome::Mismatch {
                    index: 0,
                    expected: Some(format!("{value_count} values hashing to {hash}")),
                    actual: Some(format!(
                        "{} values hashing to {}",
                        got.value_count, got.hash
                    )),
                }
            }
        }
        ExpectedResult::Values(lines) | ExpectedResult::Rows(lines) => {
            if let Some(d) = &actual.digest {
                return CompareOutcome::Mismatch {
                    index: 0,
                    expected: lines.first().cloned(),
                    actual: Some(format!("{} values hashing to {}", d.value_count, d.hash)),
                };
            }
            compare_lines(lines, &actual.lines, policy)
        }
    }
}

fn compare_lines(
    expected: &[String],
    actual: &[String],
    policy: &ComparePolicy,
) -> CompareOutcome {
    let len = expected.len().max(actual.len());
    for i in 0..len {
        match (expected.get(i), actual.get(i)) {
            (Some(e), Some(a)) => {
                if !lines_match(e, a, policy) {
                    return CompareOutcome::Mismatch {
                        index: i,
                        expected: Some(e.clone()),
                        actual: Some(a.clone()),
                    };
                }
            }
            (e, a) => {
                return CompareOutcome::Mismatch {
                    index: i,
                    expected: e.cloned(),
                    actual: a.cloned(),
                }
            }
        }
    }
    CompareOutcome::Match
}

fn lines_match(expected: &str, actual: &str, policy: &ComparePolicy) -> bool {
    if expected == actual {
        return true;
    }
    let CompareMode::Approx { relative_tolerance } = policy.mode else {
        return false;
    };
    let e_cells: Vec<&str> = expected.split('\t').collect();
    let a_cells: Vec<&str> = actual.split('\t').collect();
    if e_cells.len() != a_cells.len() {
        return false;
    }
    e_cells
        .iter()
        .zip(&a_cells)
        .all(|(e, a)| e == a || approx_numeric_match(e, a, relative_tolerance))
}

/// Tolerant matching applies only to real-valued tokens; a token counts
/// as real-valued when either side is rendered with a fractional or
/// exponent part, so integer-typed cells always compare exactly.
fn approx_numeric_match(expected: &str, actual: &str, tolerance: f64) -> bool {
    let looks_real = |s: &str| s.contains('.') || s.contains('e') || s.contains('E');
    if !looks_real(expected) && !looks_real(actual) {
        return false;
    }
    let (Ok(e), Ok(a)) = (expected.trim().parse::<f64>(), actual.trim().parse::<f64>()) else {
        return false;
    };
    (a - e).abs() <= tolerance * e.abs().max(1.0)
}
