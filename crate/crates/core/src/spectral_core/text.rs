//! Plain-text matrix format: one row per line, entries separated by commas
//! and/or whitespace, `#` starts a comment line, blank lines are ignored.

use std::fmt::Write as _;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad entry {t:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.is_empty() {
            return Err(Error::Parse { line: lineno, message: "empty row".into() });
        }
        if let Some(c) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parse { line: lineno, message: format!("non-finite entry in column {}", c + 1) });
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("ragged row: {} entries, expected {w}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, message: "no matrix rows".into() });
    }
    Matrix::from_rows(&rows)
}

pub fn write_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(m.get(r, c)));
        }
        out.push('\n');
    }
    out
}
