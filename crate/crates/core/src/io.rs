//! Comma-separated ingestion and output: observation tables with a header
//! row, headerless square matrices, sampled transforms and sweep tables.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::corr::DataMatrix;
use crate::counterexample::SweepRow;
use crate::dissimilarity::TransformSpec;
use crate::error::{Error, Result};

struct Table {
    header: Option<Vec<String>>,
    rows: Vec<(u64, Vec<f64>)>,
}

fn parse_error(source: &str, line: u64, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        column,
        message: message.into(),
    }
}

fn parse_table(text: &str, source: &str, has_header: bool) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut rows = Vec::new();
    let mut width: Option<usize> = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(source, line, 0, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_error(
                    source,
                    line,
                    record.len().min(w) + 1,
                    format!("expected {w} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        if has_header && header.is_none() {
            header = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(c, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_error(
                    source,
                    line,
                    c + 1,
                    format!("`{cell}` is not a finite decimal number"),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, values));
    }
    Ok(Table { header, rows })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Header row of variable names, then one observation per row.
pub fn parse_data(text: &str, source: &str) -> Result<DataMatrix> {
    let table = parse_table(text, source, true)?;
    let names = table
        .header
        .ok_or_else(|| parse_error(source, 1, 1, "missing header row"))?;
    let p = names.len();
    let flat: Vec<f64> = table
        .rows
        .iter()
        .flat_map(|(_, r)| r.iter().copied())
        .collect();
    DataMatrix::new(DMatrix::from_row_slice(table.rows.len(), p, &flat), names)
}

pub fn read_data(path: &Path) -> Result<DataMatrix> {
    parse_data(&read_text(path)?, &path.display().to_string())
}

/// Headerless `n x n` matrix.
pub fn parse_matrix(text: &str, source: &str) -> Result<DMatrix<f64>> {
    let table = parse_table(text, source, false)?;
    let rows = table.rows.len();
    if rows == 0 {
        return Err(parse_error(source, 1, 1, "empty matrix"));
    }
    let cols = table.rows[0].1.len();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let flat: Vec<f64> = table
        .rows
        .iter()
        .flat_map(|(_, r)| r.iter().copied())
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &flat))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&read_text(path)?, &path.display().to_string())
}

/// Two columns `x, f(x)` with ascending `x`; the first row must be `0, 0`.
pub fn parse_transform(text: &str, source: &str) -> Result<TransformSpec> {
    let table = parse_table(text, source, false)?;
    let Some((first_line, first)) = table.rows.first() else {
        return Err(parse_error(source, 1, 1, "empty transform file"));
    };
    if first.len() != 2 {
        return Err(parse_error(
            source,
            *first_line,
            1,
            "expected two columns (x, f(x))",
        ));
    }
    if first[0] != 0.0 || first[1] != 0.0 {
        return Err(parse_error(
            source,
            *first_line,
            1,
            "first row must be `0, 0`",
        ));
    }
    let grid = table.rows.iter().map(|(_, r)| r[0]).collect();
    let values = table.rows.iter().map(|(_, r)| r[1]).collect();
    TransformSpec::sampled(grid, values)
}

pub fn read_transform(path: &Path) -> Result<TransformSpec> {
    parse_transform(&read_text(path)?, &path.display().to_string())
}

/// Values use Rust's shortest round-trip formatting.
pub fn write_data<W: Write>(mut out: W, data: &DataMatrix) -> Result<()> {
    writeln!(out, "{}", data.var_names().join(","))?;
    let v = data.values();
    let mut line = String::new();
    for i in 0..v.nrows() {
        line.clear();
        for j in 0..v.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v[(i, j)].to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_matrix<W: Write>(mut out: W, m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub const SWEEP_HEADER: &str =
    "theta,pearson_margin,abs_pearson_margin,sqrt_pearson_margin,psquared_margin,violated_flags";

pub fn write_sweep<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        let m = r.margins;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.theta,
            m.pearson_margin,
            m.abs_pearson_margin,
            m.sqrt_pearson_margin,
            m.psquared_margin,
            r.violated_flags()
        )?;
    }
    Ok(())
}
