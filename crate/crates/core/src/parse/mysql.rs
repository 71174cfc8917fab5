//! Scanner inventorying MySQL Test Framework runner commands.
//!
//! The MySQL format is never lowered into the IR; its files are only
//! scanned so runner directives can be counted. A command is either the
//! token immediately following a leading `--`, or a bare lowercase
//! directive line outside SQL statement context.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::parse::split::{SplitOptions, Splitter};
use crate::parse::{decode_utf8, ParseDiagnostic};

/// Histogram of runner command occurrences.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandInventory {
    pub histogram: BTreeMap<String, u64>,
    pub distinct_count: usize,
}

impl CommandInventory {
    fn record(&mut self, command: &str) {
        *self.histogram.entry(command.to_string()).or_insert(0) += 1;
        self.distinct_count = self.histogram.len();
    }

    pub fn merge(&mut self, other: &CommandInventory) {
        for (cmd, count) in &other.histogram {
            *self.histogram.entry(cmd.clone()).or_insert(0) += count;
        }
        self.distinct_count = self.histogram.len();
    }

    pub fn total(&self) -> u64 {
        self.histogram.values().sum()
    }
}

/// Counts runner commands in one MySQL test file.
pub fn scan_mysql_commands(input: &[u8]) -> CommandInventory {
    let mut diagnostics: Vec<ParseDiagnostic> = Vec::new();
    let text = decode_utf8(input, &mut diagnostics);
    let mut inventory = CommandInventory::default();
    let mut tracker = Splitter::new(SplitOptions::mysql());

    for line in text.lines() {
        let trimmed = line.trim();
        if tracker.at_boundary() {
            if trimmed.starts_with('#') || trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("--") {
                // Commands follow the dashes immediately; "-- text" is a
                // comment.
                let token = rest.split_whitespace().next().unwrap_or("");
                if rest.starts_with(char::is_whitespace) {
                    continue;
                }
                if command_shaped(token) {
                    inventory.record(token);
                }
                continue;
            }
            let first = trimmed
                .split(|c: char| c.is_whitespace() || c == ';' || c == '(')
                .next()
                .unwrap_or("");
            if command_shaped(first) && KNOWN_COMMANDS.contains(&first) {
                inventory.record(first);
                continue;
            }
        }
        tracker.feed(line);
        tracker.feed("\n");
    }
    inventory
}

fn command_shaped(token: &str) -> bool {
    !token.is_empty()
        && token.chars().next().is_some_and(|c| c.is_ascii_lowercase())
        && token
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Bare (un-dashed) directives recognized outside SQL context. The full
/// framework has 112 unique commands; this registry covers the documented
/// set that appears bare in test files.
const KNOWN_COMMANDS: &[&str] = &[
    "append_file",
    "cat_file",
    "change_user",
    "character_set",
    "chmod",
    "connect",
    "connection",
    "copy_file",
    "dec",
    "delimiter",
    "die",
    "diff_files",
    "dirty_close",
    "disable_abort_on_error",
    "disable_async_client",
    "disable_connect_log",
    "disable_info",
    "disable_metadata",
    "disable_ps_protocol",
    "disable_query_log",
    "disable_reconnect",
    "disable_result_log",
    "disable_rpl_parse",
    "disable_session_track_info",
    "disable_testcase",
    "disable_warnings",
    "disconnect",
    "echo",
    "enable_abort_on_error",
    "enable_async_client",
    "enable_connect_log",
    "enable_info",
    "enable_metadata",
    "enable_ps_protocol",
    "enable_query_log",
    "enable_reconnect",
    "enable_result_log",
    "enable_rpl_parse",
    "enable_session_track_info",
    "enable_testcase",
    "enable_warnings",
    "end",
    "end_timer",
    "error",
    "eval",
    "exec",
    "exec_in_background",
    "execw",
    "exit",
    "expr",
    "file_exists",
    "force_cpdir",
    "force_rmdir",
    "horizontal_results",
    "if",
    "inc",
    "let",
    "list_files",
    "list_files_append_file",
    "list_files_write_file",
    "lowercase_result",
    "mkdir",
    "move_file",
    "output",
    "perl",
    "ping",
    "query",
    "query_get_value",
    "query_horizontal",
    "query_vertical",
    "real_sleep",
    "reap",
    "remove_file",
    "remove_files_wildcard",
    "replace_column",
    "replace_numeric_round",
    "replace_regex",
    "replace_result",
    "reset_connection",
    "result_format",
    "rmdir",
    "save_master_pos",
    "send",
    "send_eval",
    "send_quit",
    "send_shutdown",
    "shutdown_server",
    "skip",
    "sleep",
    "sorted_result",
    "source",
    "start_timer",
    "sync_slave_with_master",
    "sync_with_master",
    "vertical_results",
    "wait_for_slave_to_stop",
    "while",
    "write_file",
    "write_line",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_yields_empty_inventory() {
        let inv = scan_mysql_commands(b"");
        assert!(inv.histogram.is_empty());
        assert_eq!(inv.distinct_count, 0);
    }

    #[test]
    fn let_line_is_counted_sql_is_not() {
        let inv = scan_mysql_commands(
            b"let $count = 1;\nSET @@optimizer_switch='on';\nSELECT 1;\n1\n",
        );
        assert_eq!(inv.histogram.get("let"), Some(&1));
        assert_eq!(inv.distinct_count, 1);
    }

    #[test]
    fn dashed_commands_are_counted_by_token() {
        let inv = scan_mysql_commands(b"--exec echo hi\n--exec echo again\n--write_file f\nEOF\n");
        assert_eq!(inv.histogram.get("exec"), Some(&2));
        assert_eq!(inv.histogram.get("write_file"), Some(&1));
        assert_eq!(inv.distinct_count, 2);
    }

    #[test]
    fn dash_space_is_a_comment_not_a_command() {
        let inv = scan_mysql_commands(b"-- just a comment\n");
        assert!(inv.histogram.is_empty());
    }

    #[test]
    fn directives_inside_sql_statements_are_not_counted() {
        let inv = scan_mysql_commands(b"SELECT 'let',\n'exec'\nFROM t;\n");
        assert!(inv.histogram.is_empty());
    }

    #[test]
    fn hash_comments_are_ignored() {
        let inv = scan_mysql_commands(b"# let $x = 1;\nsleep 2;\n");
        assert_eq!(inv.histogram.get("sleep"), Some(&1));
        assert_eq!(inv.histogram.get("let"), None);
    }
}
