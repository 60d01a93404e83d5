//! Plain-text artifact formats.
//!
//! Matrices: a `rows cols` header line, then one whitespace-separated row per
//! line with 17 significant digits, which round-trips every `f64`. Index
//! lists: one comma-separated line of 1-based positions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&fmt_f64(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty matrix file")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("bad header {header:?}")))
        .collect::<Result<_, _>>()?;
    let [rows, cols] = dims[..] else {
        return Err(format!("bad header {header:?}"));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for line in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| format!("bad number {tok:?}"))?,
            );
        }
        if data.len() - before != cols {
            return Err(format!(
                "row {} has {} entries, expected {cols}",
                seen + 1,
                data.len() - before
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(format!("found {seen} rows, expected {rows}"));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// 0-based indices written as 1-based.
pub fn format_indices(indices: &[usize]) -> String {
    let items: Vec<String> = indices.iter().map(|i| (i + 1).to_string()).collect();
    format!("{}\n", items.join(","))
}

/// Inverse of [`format_indices`]; returns 0-based indices.
pub fn parse_indices(text: &str) -> Result<Vec<usize>, String> {
    text.trim()
        .split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(0) => Err("index 0 in a 1-based list".to_string()),
            Ok(i) => Ok(i - 1),
            Err(_) => Err(format!("bad index {t:?}")),
        })
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingArtifact(path.to_path_buf())
        } else {
            CliError::io(path, e)
        }
    })
}

fn malformed(path: &Path, reason: String) -> CliError {
    CliError::Malformed {
        path: path.to_path_buf(),
        reason,
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> CliResult<()> {
    write_text(path, &format_matrix(m))
}

pub fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    parse_matrix(&read_text(path)?).map_err(|r| malformed(path, r))
}

pub fn write_indices(path: &Path, indices: &[usize]) -> CliResult<()> {
    write_text(path, &format_indices(indices))
}

pub fn read_indices(path: &Path) -> CliResult<Vec<usize>> {
    parse_indices(&read_text(path)?).map_err(|r| malformed(path, r))
}

pub fn write_scalar(path: &Path, v: f64) -> CliResult<()> {
    write_text(path, &format!("{}\n", fmt_f64(v)))
}

pub fn read_scalar(path: &Path) -> CliResult<f64> {
    let text = read_text(path)?;
    text.trim()
        .parse()
        .map_err(|_| malformed(path, format!("bad number {:?}", text.trim())))
}

/// Renders rows of already formatted cells as CSV with a header.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Optional float cell: empty when absent.
pub fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Renders `values` one per line with their step index.
pub fn contributions_csv(values: &[f64]) -> CliResult<String> {
    let rows: Vec<Vec<String>> = values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), fmt_f64(*v)])
        .collect();
    csv_string(&["step", "contribution"], &rows)
}

/// Human-readable summary used on stdout.
pub fn describe(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k}: {v}");
    }
    s
}
