use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde_json::Value;

use crate::config::Settings;
use crate::{CliError, Format};

/// One output row, kept in both shapes so either format can be emitted.
pub struct Row {
    pub cells: Vec<String>,
    pub json: Value,
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Row>,
}

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Quotes a CSV field when it needs it.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write(settings: &Settings, table: &Table) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match settings.output.as_deref() {
        None | Some("-") | Some("stdout") => Box::new(io::stdout().lock()),
        Some(path) => Box::new(File::create(path).map_err(CliError::io)?),
    };
    let mut w = BufWriter::new(sink);
    emit(&mut w, settings.format, table).map_err(CliError::io)?;
    w.flush().map_err(CliError::io)
}

fn emit(w: &mut impl Write, format: Format, table: &Table) -> io::Result<()> {
    match format {
        Format::Csv => {
            let head: Vec<String> = table.header.iter().map(|h| field(h)).collect();
            writeln!(w, "{}", head.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.cells.iter().map(|c| field(c)).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
        }
        Format::Jsonl => {
            for row in &table.rows {
                writeln!(w, "{}", row.json)?;
            }
        }
    }
    Ok(())
}
