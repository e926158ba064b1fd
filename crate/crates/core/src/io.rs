//! CSV samples and JSON reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::model::{LabeledSample, Matrix};

fn parse_error(path: &Path, row: usize, column: &str, message: String) -> Error {
    Error::Parse { path: path.display().to_string(), row, column: column.to_string(), message }
}

/// Reads a sample with header `f_1,...,f_M,y`. Rows are numbered from 1
/// after the header. Every value is checked against `loss`.
pub fn load_sample(path: impl AsRef<Path>, loss: &LossModel) -> Result<LabeledSample> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let m = header.len().saturating_sub(1);
    let expected: Vec<String> = (1..=m).map(|j| format!("f_{j}")).chain(std::iter::once("y".to_string())).collect();
    if m == 0 || header != expected {
        return Err(parse_error(path, 0, "header", format!("expected `f_1,...,f_M,y`, got `{}`", header.join(","))));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(parse_error(path, row, "*", format!("expected {} cells, got {}", header.len(), record.len())));
        }
        for (cell, name) in record.iter().zip(&header) {
            let v: f64 = cell.parse().map_err(|_| parse_error(path, row, name, format!("non-numeric value `{cell}`")))?;
            let check = if name == "y" { loss.check_label(v) } else { loss.check_prediction(v) };
            check.map_err(|e| parse_error(path, row, name, e.to_string()))?;
            if name == "y" {
                labels.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(parse_error(path, 1, "*", "no observations".into()));
    }
    LabeledSample::new(Matrix::new(labels.len(), m, values)?, labels)
}

/// Writes a sample in the format read by [`load_sample`]. Values use the
/// shortest representation that round-trips exactly.
pub fn save_sample(sample: &LabeledSample, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let m = sample.m();
    let header: Vec<String> = (1..=m).map(|j| format!("f_{j}")).chain(std::iter::once("y".to_string())).collect();
    w.write_record(&header)?;
    for (i, y) in sample.labels.iter().enumerate() {
        let row: Vec<String> = sample.predictions.row(i).iter().chain(std::iter::once(y)).map(|v| format!("{v:?}")).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_to_string<T: Serialize>(report: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn save_report<T: Serialize>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(report_to_string(report)?.as_bytes())?;
    w.flush()?;
    Ok(())
}
