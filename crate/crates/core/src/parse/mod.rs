//! Parsers lowering each supported test-file format into the unified IR,
//! and the serializer emitting it back out as SLT-dialect text.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod mysql;
pub mod pg;
pub mod slt;
pub mod split;

pub use mysql::{scan_mysql_commands, CommandInventory};
pub use pg::parse_pg_regression;
pub use slt::{parse_slt, serialize_slt, SerializeError, SltDialect};

/// A problem found while parsing; errors mean content was skipped,
/// warnings mean it was preserved with caveats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub line: u32,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Error,
    Warning,
}

impl ParseDiagnostic {
    pub fn error(line: u32, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            line,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(line: u32, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            line,
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: line {}: {}", sev, self.line, self.message)
    }
}

/// Decodes input as UTF-8, replacing invalid sequences and recording a
/// warning when replacement happened.
pub(crate) fn decode_utf8(bytes: &[u8], diagnostics: &mut Vec<ParseDiagnostic>) -> String {
    match String::from_utf8(bytes.to_vec()) {
        Ok(s) => s,
        Err(e) => {
            diagnostics.push(ParseDiagnostic::warning(
                1,
                format!(
                    "input is not valid UTF-8 (first bad byte at offset {}); decoded lossily",
                    e.utf8_error().valid_up_to()
                ),
            ));
            String::from_utf8_lossy(bytes).into_owned()
        }
    }
}
