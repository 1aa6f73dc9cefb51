//! Reading samples from text and CSV.

use std::io::Read;

use crate::error::{Error, Result};
use crate::laplace_core::Sample;

/// One number per line; blank lines are skipped. Row numbers in errors are
/// 1-based line numbers.
pub fn read_lines<R: Read>(mut reader: R) -> Result<Sample> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut values = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(parse_value(t, i + 1)?);
        rows.push(i + 1);
    }
    check_rows(values, &rows)
}

/// Column `column` of a headed CSV file. Row numbers count data rows from 1.
pub fn read_csv_column<R: Read>(reader: R, column: &str) -> Result<Sample> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "column {column:?} not found; available: {}",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?;
    let mut values = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let field = rec.get(idx).unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        values.push(parse_value(field, i + 1)?);
        rows.push(i + 1);
    }
    check_rows(values, &rows)
}

fn parse_value(text: &str, row: usize) -> Result<f64> {
    text.parse::<f64>().map_err(|_| Error::InvalidValue {
        row,
        value: text.to_string(),
        reason: "not a number",
    })
}

/// Builds the sample, translating positions in `values` back to source rows.
fn check_rows(values: Vec<f64>, rows: &[usize]) -> Result<Sample> {
    Sample::new(values).map_err(|e| match e {
        Error::InvalidValue { row, value, reason } => Error::InvalidValue {
            row: rows[row - 1],
            value,
            reason,
        },
        other => other,
    })
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidParameter(format!("malformed CSV: {e}"))
}
