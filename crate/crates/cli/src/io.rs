//! File formats: the data CSV and the sparse-triplet matrix JSON.
//!
//! Data CSV: first column is the response, the rest are raw covariates. A
//! header row is recognized when none of its cells parse as numbers.
//!
//! Matrix JSON: `{"p": p, "entries": [[j, k, value], ...]}` listing the
//! nonzero upper-triangle entries (`j <= k`, 0-based). Values are written in
//! shortest round-trip form, so write-then-read is exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use quadreg::{standardize_columns, CoefMatrix, DMatrix, DVector, Dataset};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

/// Raw columns as read from disk, before intercept augmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    pub response: Vec<f64>,
    /// Row-major, `response.len() x n_cols`.
    pub covariates: Vec<f64>,
    pub n_cols: usize,
}

impl RawData {
    pub fn into_dataset(self, intercept: bool, standardize: bool) -> Result<Dataset<f64>, CliError> {
        let n = self.response.len();
        let mut raw = DMatrix::from_row_slice(n, self.n_cols, &self.covariates);
        if standardize {
            raw = standardize_columns(&raw);
        }
        Dataset::from_raw(raw, DVector::from_vec(self.response), intercept).map_err(CliError::from)
    }
}

pub fn read_data_csv(path: &Path) -> Result<RawData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, e))?;

    let mut width = None;
    let mut response = Vec::new();
    let mut covariates = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data_err(path, e))?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|c| c.parse::<f64>().ok()).collect();
        if idx == 0 && parsed.iter().all(Option::is_none) {
            continue; // header
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(data_err(path, format!("line {line}: expected {w} fields, found {}", record.len())));
        }
        if w < 2 {
            return Err(data_err(path, format!("line {line}: need a response and at least one covariate")));
        }
        for (col, (cell, value)) in record.iter().zip(&parsed).enumerate() {
            match value {
                Some(v) if v.is_finite() => {
                    if col == 0 {
                        response.push(*v);
                    } else {
                        covariates.push(*v);
                    }
                }
                Some(_) => {
                    return Err(data_err(path, format!("line {line}, column {}: non-finite value {cell:?}", col + 1)))
                }
                None => {
                    return Err(data_err(path, format!("line {line}, column {}: not a number: {cell:?}", col + 1)))
                }
            }
        }
    }
    let Some(w) = width else {
        return Err(data_err(path, "no data rows"));
    };
    Ok(RawData {
        response,
        covariates,
        n_cols: w - 1,
    })
}

pub fn write_data_csv(path: &Path, y: &DVector<f64>, raw: &DMatrix<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(path.display().to_string(), e.into()))?;
    let io = |e: csv::Error| CliError::Io(path.display().to_string(), e.into());
    let mut header = vec!["y".to_string()];
    header.extend((1..=raw.ncols()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(io)?;
    for i in 0..raw.nrows() {
        let mut row = vec![y[i].to_string()];
        row.extend(raw.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(path.display().to_string(), e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub p: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl MatrixJson {
    pub fn from_matrix(b: &CoefMatrix<f64>) -> Self {
        let v = b.values();
        let mut entries = Vec::new();
        for k in 0..b.p() {
            for j in 0..=k {
                if v[(j, k)] != 0.0 {
                    entries.push((j, k, v[(j, k)]));
                }
            }
        }
        MatrixJson { p: b.p(), entries }
    }

    /// Symmetric matrix with both triangles filled from the triplets.
    pub fn to_matrix(&self) -> Result<CoefMatrix<f64>, CliError> {
        let mut m = DMatrix::zeros(self.p, self.p);
        for &(j, k, v) in &self.entries {
            if j > k || k >= self.p {
                return Err(CliError::Data(format!("triplet ({j}, {k}) outside the upper triangle of a {0}x{0} matrix", self.p)));
            }
            if !v.is_finite() {
                return Err(CliError::Data(format!("triplet ({j}, {k}) has non-finite value")));
            }
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
        Ok(CoefMatrix::from_matrix(m)?)
    }
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::Io(p.display().to_string(), e))?;
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(p.display().to_string(), e.into()))?;
            writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::Io(p.display().to_string(), e))
        }
        None => {
            let out = serde_json::to_string_pretty(value).expect("serializable");
            println!("{out}");
            Ok(())
        }
    }
}

pub fn read_matrix_json(path: &Path) -> Result<CoefMatrix<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    let parsed: MatrixJson = serde_json::from_str(&text).map_err(|e| data_err(path, e))?;
    parsed.to_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file_with(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_is_detected_and_skipped() {
        let f = file_with("y,x1,x2\n1,2,3\n4,5,6\n");
        let raw = read_data_csv(f.path()).unwrap();
        assert_eq!(raw.response, vec![1.0, 4.0]);
        assert_eq!(raw.covariates, vec![2.0, 3.0, 5.0, 6.0]);
        let f = file_with("1,2,3\n");
        assert_eq!(read_data_csv(f.path()).unwrap().response, vec![1.0]);
    }

    #[test]
    fn bad_cells_report_their_line() {
        for (text, needle) in [
            ("y,x\n1,2\n3,abc\n", "line 3"),
            ("1,2\n3\n", "line 2"),
            ("1,2\nNaN,1\n", "line 2"),
            ("1,inf\n", "line 1"),
        ] {
            let err = read_data_csv(file_with(text).path()).unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?}: {err}");
        }
    }

    #[test]
    fn triplets_round_trip_exactly() {
        let m = DMatrix::from_fn(4, 4, |j, k| if j == k { 0.0 } else { 1.0 / (1.0 + j as f64 + k as f64) / 3.0 });
        let b = CoefMatrix::from_matrix(m).unwrap();
        let json = serde_json::to_string(&MatrixJson::from_matrix(&b)).unwrap();
        let back: MatrixJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_matrix().unwrap().values(), b.values());
        assert!(back.entries.iter().all(|&(j, k, _)| j <= k));
    }

    #[test]
    fn lower_triangle_triplets_rejected() {
        let bad = MatrixJson { p: 3, entries: vec![(2, 1, 1.0)] };
        assert!(bad.to_matrix().is_err());
    }
}
