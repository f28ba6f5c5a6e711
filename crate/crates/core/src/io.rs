//! Plain-text matrix files.
//!
//! One row per line, entries separated by commas or whitespace (detected per
//! file), an optional header line, `#` comments and blank lines ignored. `NA`
//! reads as `NaN`. Values are written with 17 significant digits, which
//! round-trips every `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Lossless text form of a double.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_token(tok: &str) -> Option<f64> {
    match tok {
        "NA" | "na" | "NaN" | "nan" => Some(f64::NAN),
        _ => tok.parse().ok(),
    }
}

fn split_row(line: &str, comma: bool) -> Vec<&str> {
    if comma {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Parses matrix text; `origin` only labels errors.
pub fn parse_matrix(text: &str, origin: &Path) -> Result<DMatrix<f64>> {
    let err = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line, message };
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let Some(&(_, first)) = lines.first() else {
        return Err(err(0, "no matrix rows".into()));
    };
    let comma = first.contains(',');
    let skip_header = split_row(first, comma).iter().any(|t| parse_token(t).is_none());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for &(no, line) in lines.iter().skip(usize::from(skip_header)) {
        let row = split_row(line, comma)
            .into_iter()
            .map(|t| parse_token(t).ok_or_else(|| err(no, format!("not a number: {t:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(prev) = rows.first() {
            if prev.len() != row.len() {
                return Err(err(no, format!("expected {} columns, found {}", prev.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err(0, "no matrix rows".into()));
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&fs::read_to_string(path)?, path)
}

/// Writes one row per line with `delimiter` between entries.
pub fn write_matrix<W: Write>(out: &mut W, m: &DMatrix<f64>, delimiter: &str) -> Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        writeln!(out, "{}", line.join(delimiter))?;
    }
    Ok(())
}

pub fn write_matrix_file(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix(&mut buf, m, ",")?;
    fs::write(path, buf)?;
    Ok(())
}
