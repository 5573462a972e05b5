//! Panel file I/O.
//!
//! Panels travel as headerless CSV: one row per time point, one column per
//! coordinate, values in the shortest representation that round-trips IEEE-754
//! doubles exactly.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::Panel;

/// Read a headerless CSV panel. Rows must be rectangular, entries finite.
pub fn read_panel<R: Read>(reader: R) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(record.len());
        for field in record.iter() {
            let value: f64 = field.parse().map_err(|_| {
                Error::InvalidInput(format!("row {}: bad number {field:?}", idx + 1))
            })?;
            row.push(value);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::InvalidInput(format!(
                    "row {} has {} columns, expected {w}",
                    idx + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        rows.push(row);
    }
    let n = rows.len();
    let d = width.unwrap_or(0);
    if n == 0 || d == 0 {
        return Err(Error::EmptyPanel("CSV panel has no data"));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let data = Array2::from_shape_vec((n, d), flat)
        .map_err(|e| Error::InvalidInput(format!("panel shape: {e}")))?;
    Panel::new(data)
}

/// Write a panel as headerless CSV with round-trip float formatting.
pub fn write_panel<W: Write>(writer: W, panel: &Panel) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for row in panel.data().rows() {
        wtr.write_record(row.iter().map(|x| format_float(*x)))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_panel_path(path: &Path) -> Result<Panel> {
    read_panel(std::fs::File::open(path)?)
}

pub fn write_panel_path(path: &Path, panel: &Panel) -> Result<()> {
    write_panel(std::fs::File::create(path)?, panel)
}

/// Read a square matrix from headerless CSV.
pub fn read_matrix<R: Read>(reader: R) -> Result<Array2<f64>> {
    let panel = read_panel(reader)?;
    Ok(panel.data().clone())
}

pub fn read_matrix_path(path: &Path) -> Result<Array2<f64>> {
    read_matrix(std::fs::File::open(path)?)
}

/// Write a matrix as headerless CSV.
pub fn write_matrix<W: Write>(writer: W, matrix: &Array2<f64>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for row in matrix.rows() {
        wtr.write_record(row.iter().map(|x| format_float(*x)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Shortest decimal form that parses back to the same double.
fn format_float(x: f64) -> String {
    let mut buf = ryu_format(x);
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

fn ryu_format(x: f64) -> String {
    // Rust's Display for f64 already produces the shortest round-trip form.
    format!("{x}")
}

/// Export a partial-sum path as two-column CSV `(k, value)`.
pub fn write_path<W: Write>(writer: W, path: &crate::covariance::PartialSumPath) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for (idx, value) in path.values().iter().enumerate() {
        wtr.write_record([format!("{}", idx + 1), format_float(*value)])?;
    }
    wtr.flush()?;
    Ok(())
}
