//! Versioned CSV tables: a schema comment line, a header row, then records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, Result};

pub const SCHEMA_LINE: &str = "# ou-drift-bench csv v1";

/// A table held in memory until written, so files appear whole or not at all.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{SCHEMA_LINE}").map_err(|e| CliError::io(path, e))?;
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush().map_err(|e| CliError::io(path, e))?;
        }
        out.flush().map_err(|e| CliError::io(path, e))
    }

    /// Read a table written by [`Table::write`]; any other schema line is refused.
    pub fn read(path: &Path) -> Result<Table> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut first = String::new();
        reader.read_line(&mut first).map_err(|e| CliError::io(path, e))?;
        let first = first.trim_end_matches(['\r', '\n']);
        if first != SCHEMA_LINE {
            return Err(CliError::Schema { path: path.to_path_buf(), found: first.to_string() });
        }
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, csv::Error>>()?;
        Ok(Table { header, rows })
    }
}

/// Locale-free float formatting; `{}` gives the shortest round-tripping form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
