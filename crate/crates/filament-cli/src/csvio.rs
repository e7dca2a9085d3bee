//! CSV writing and reading.
//!
//! Floating-point cells are written with 17 significant digits, which
//! round-trips `f64` losslessly; summaries recomputed from a written file
//! therefore match the in-memory values bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::errors::{CliError, CliResult};

/// Format one floating-point cell (17 significant digits).
pub fn cell(value: f64) -> String {
    format!("{value:.16e}")
}

/// A buffered CSV writer with a fixed header.
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    /// Create the file and write the header row.
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        let file = File::create(path)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    /// Write one row of preformatted cells.
    pub fn row(&mut self, cells: &[String]) -> CliResult<()> {
        debug_assert_eq!(cells.len(), self.columns);
        writeln!(self.out, "{}", cells.join(","))?;
        Ok(())
    }

    /// Flush and close.
    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// A CSV file read back into memory: header names and string cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Index of a named column.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parse a named column as floating point.
    pub fn numeric_column(&self, name: &str) -> CliResult<Vec<f64>> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| CliError::Config(format!("column {name:?} not found")))?;
        self.rows
            .iter()
            .map(|row| {
                row[idx]
                    .parse::<f64>()
                    .map_err(|e| CliError::Config(format!("bad numeric cell {:?}: {e}", row[idx])))
            })
            .collect()
    }
}

/// Read a whole CSV file. Cells never contain commas or quotes, so a plain
/// split suffices.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(CliError::Config(format!(
                "{}: row has {} cells, header has {}",
                path.display(),
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}
