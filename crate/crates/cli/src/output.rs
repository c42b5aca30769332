//! Output records. Every file carries the tool version and the resolved
//! command, so `--replay` can rerun it.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Command, Format};
use crate::error::CliError;
use crate::graph_file;

pub const TOOL: &str = "smallworld";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A rectangular result with a JSON summary of scalar findings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: serde_json::Map<String, Value>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(value).expect("serializable summary"));
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Opens `path` for writing, or stdout when absent.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(format!("cannot write {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// The resolved command as embedded in outputs. Output paths are blanked so
/// that a replay to another path reproduces the same bytes.
pub fn config_value(cmd: &Command) -> Value {
    let mut v = serde_json::to_value(cmd).expect("commands serialize");
    for path in ["/out", "/output/out"] {
        if let Some(slot) = v.pointer_mut(path) {
            *slot = Value::Null;
        }
    }
    v
}

/// CSV with `#` metadata lines, or one JSON document.
pub fn write_table(table: &Table, cmd: &Command, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let mut w = sink(out)?;
    match format {
        Format::Csv => {
            writeln!(w, "# tool: {TOOL} {VERSION}")?;
            writeln!(w, "# config: {}", config_value(cmd))?;
            writeln!(w, "# summary: {}", Value::Object(table.summary.clone()))?;
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(&table.columns)?;
            for row in &table.rows {
                csv.write_record(row.iter().map(cell))?;
            }
            csv.flush()?;
        }
        Format::Json => {
            let doc = json!({
                "tool": TOOL,
                "version": VERSION,
                "config": config_value(cmd),
                "summary": table.summary,
                "columns": table.columns,
                "rows": table.rows,
            });
            serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::io(e.to_string()))?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A JSON document wrapping `result`.
pub fn write_document(result: &impl Serialize, cmd: &Command, out: Option<&Path>) -> Result<(), CliError> {
    let mut w = sink(out)?;
    let doc = json!({ "tool": TOOL, "version": VERSION, "config": config_value(cmd), "result": result });
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Reads the `result` of a JSON document written by [`write_document`].
pub fn read_document<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::io(format!("{} is not a result file: {e}", path.display())))?;
    let result = doc
        .get_mut("result")
        .map(Value::take)
        .ok_or_else(|| CliError::io(format!("{} has no result", path.display())))?;
    serde_json::from_value(result).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// The command embedded in any output file of this tool.
pub fn embedded_command(path: &Path) -> Result<Command, CliError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_string(&mut text))
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    let config = if let Ok(doc) = serde_json::from_str::<Value>(&text) {
        doc.get("config").cloned()
    } else if let Some(first) = text.lines().next().filter(|l| l.starts_with('{')) {
        graph_file::header_config(first)
    } else {
        text.as_bytes()
            .lines()
            .map_while(Result::ok)
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix("# config: ").and_then(|c| serde_json::from_str(c).ok()))
    };
    let config = config.ok_or_else(|| CliError::io(format!("{} carries no embedded configuration", path.display())))?;
    serde_json::from_value(config)
        .map_err(|e| CliError::io(format!("{}: unreadable configuration: {e}", path.display())))
}
