use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Stable exit code taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Violation = 1,
    Usage = 2,
    Hypothesis = 3,
    Refutation = 4,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

/// An error that stops a command before it produces a report.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            exit: Exit::Usage,
            message: message.into(),
        }
    }

    pub fn violation(message: impl Into<String>) -> Self {
        Self {
            exit: Exit::Violation,
            message: message.into(),
        }
    }
}

/// A rectangular table for curve-like results.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// What a command produced: a JSON result, an optional table, and the exit it implies.
#[derive(Debug)]
pub struct Outcome {
    pub result: Value,
    pub table: Option<Table>,
    pub exit: Exit,
    pub note: Option<String>,
}

impl Outcome {
    pub fn ok(result: impl Serialize) -> Self {
        Self {
            result: serde_json::to_value(result).expect("results serialize"),
            table: None,
            exit: Exit::Success,
            note: None,
        }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn flag(mut self, exit: Exit, note: impl Into<String>) -> Self {
        self.exit = exit;
        self.note = Some(note.into());
        self
    }
}

#[derive(Serialize)]
struct Document<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a Value,
    result: &'a Value,
}

pub fn render(
    command: &str,
    seed: u64,
    config: &Value,
    outcome: &Outcome,
    format: Format,
) -> Result<String, Failure> {
    match format {
        Format::Json => {
            let doc = Document {
                tool: "mubs",
                version: VERSION,
                command,
                seed,
                config,
                result: &outcome.result,
            };
            let mut text = serde_json::to_string_pretty(&doc).expect("documents serialize");
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let table = outcome.table.as_ref().ok_or_else(|| {
                Failure::usage(format!(
                    "`{command}` has no tabular output; use --format json"
                ))
            })?;
            let mut text =
                format!("# mubs {VERSION} command={command} seed={seed}\n# config={config}\n");
            let mut writer = csv::Writer::from_writer(Vec::new());
            let io_err = |e: csv::Error| Failure::violation(format!("csv encoding failed: {e}"));
            writer.write_record(&table.header).map_err(io_err)?;
            for row in &table.rows {
                writer.write_record(row).map_err(io_err)?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| Failure::violation(format!("csv encoding failed: {e}")))?;
            text.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
            Ok(text)
        }
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::violation(format!("cannot write to stdout: {e}"))),
    }
}
