//! Plain-text formats: dataset and matrix CSV, and float formatting.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_rows(out: &mut String, m: &DMatrix<f64>) {
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
}

/// One point per row, preceded by a `# n=<n> d=<d>` header.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# n={} d={}", data.n(), data.d());
    write_rows(&mut out, data.points());
    out
}

/// One matrix row per line, no header.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    write_rows(&mut out, m);
    out
}

/// Parses numeric CSV rows. Blank lines and lines starting with `#` are
/// skipped; all rows must have the same width.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| {
                c.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("{:?}: {e}", c.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no data rows".into(),
        });
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_row_iterator(r, c, rows.into_iter().flatten()))
}

/// Reads a dataset CSV. When the `# n=.. d=..` header is present it must
/// agree with the body. Rows are normalized on load.
pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let header = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .filter(|l| l.starts_with('#'));
    let m = parse_matrix_csv(text)?;
    if let Some(h) = header {
        let mut n = None;
        let mut d = None;
        for tok in h.trim_start_matches('#').split_whitespace() {
            if let Some(v) = tok.strip_prefix("n=") {
                n = v.parse::<usize>().ok();
            } else if let Some(v) = tok.strip_prefix("d=") {
                d = v.parse::<usize>().ok();
            }
        }
        if n.is_some_and(|n| n != m.nrows()) || d.is_some_and(|d| d != m.ncols()) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header says {h:?} but body is {} x {}", m.nrows(), m.ncols()),
            });
        }
    }
    Dataset::from_rows(m)
}
