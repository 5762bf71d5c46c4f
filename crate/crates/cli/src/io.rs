//! On-disk formats: headered CSV matrices, pretty JSON, SHA-256 digests.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which is enough
//! for every `f64` to parse back to the identical value.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use pisco_core::Matrix;

use crate::error::{CliError, Result};

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn numbered_headers(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `bytes` and returns their digest.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(bytes))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Serializes a table of string cells with `,` delimiters and `\n` terminators.
pub fn csv_bytes(headers: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    // Writing to a Vec cannot fail.
    w.write_record(headers).expect("in-memory csv write");
    for row in rows {
        w.write_record(&row).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

pub fn matrix_csv_bytes(headers: &[String], m: &Matrix<f64>) -> Vec<u8> {
    csv_bytes(headers, m.rows_iter().map(|r| r.iter().map(|&v| format_float(v)).collect()))
}

pub fn write_matrix(path: &Path, headers: &[String], m: &Matrix<f64>) -> Result<String> {
    write_bytes(path, &matrix_csv_bytes(headers, m))
}

/// Parsed numeric CSV: header names plus a dense matrix.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub values: Matrix<f64>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

pub fn parse_table(path: &Path, bytes: &[u8]) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers: Vec<String> = r.headers().map_err(|e| CliError::input(path, e.to_string()))?.iter().map(str::to_owned).collect();
    if headers.is_empty() {
        return Err(CliError::input(path, "no columns"));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::input(path, e.to_string()))?;
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::input(path, format!("row {}, column `{}`: not a number: {cell:?}", line + 1, headers[col]))
            })?;
            if !v.is_finite() {
                return Err(CliError::input(path, format!("row {}, column `{}`: non-finite value", line + 1, headers[col])));
            }
            data.push(v);
        }
        rows += 1;
    }
    let values = Matrix::from_vec(rows, headers.len(), data).map_err(|e| CliError::input(path, e.to_string()))?;
    Ok(Table { headers, values })
}

pub fn read_table(path: &Path) -> Result<Table> {
    parse_table(path, &read_bytes(path)?)
}

/// Reads a matrix whose columns must be exactly `prefix0, prefix1, ...`.
pub fn read_numbered(path: &Path, prefix: &str) -> Result<Matrix<f64>> {
    let t = read_table(path)?;
    check_numbered(path, &t, prefix)?;
    Ok(t.values)
}

pub fn check_numbered(path: &Path, t: &Table, prefix: &str) -> Result<()> {
    let expected = numbered_headers(prefix, t.headers.len());
    if t.headers != expected {
        return Err(CliError::input(path, format!("expected columns {prefix}0..{prefix}{}", t.headers.len() - 1)));
    }
    Ok(())
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    write_bytes(path, &json_bytes(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::input(path, e.to_string()))
}

/// Resolves `p` against `base` unless it is already absolute.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips_exactly() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX, 0.0, -0.0] {
            let back: f64 = format_float(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v}");
        }
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = Matrix::from_fn(3, 2, |i, j| (i as f64 + 1.0) / (j as f64 + 7.0) - 0.3);
        let headers = numbered_headers("f", 2);
        let bytes = matrix_csv_bytes(&headers, &m);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("f0,f1\n"));
        assert!(!text.contains('\r'));
        let t = parse_table(Path::new("mem.csv"), &bytes).unwrap();
        assert_eq!(t.headers, headers);
        assert_eq!(t.values, m);
    }

    #[test]
    fn rejects_non_numeric_and_ragged_rows() {
        let p = Path::new("mem.csv");
        assert!(parse_table(p, b"f0,f1\n1,x\n").is_err());
        assert!(parse_table(p, b"f0,f1\n1,2\n3\n").is_err());
        assert!(parse_table(p, b"f0\nNaN\n").is_err());
    }
}
