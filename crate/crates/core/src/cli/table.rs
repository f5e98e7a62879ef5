//! `samples.csv` and the other CSV artifacts.
//!
//! Header `x1,...,xm,y`, UTF-8, LF line endings, every value written with 17
//! significant digits so that parsing reproduces the exact `f64`.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Result, SdrError};
use crate::experiments::write_atomic;
use crate::types::SampleSet;

/// Formats a value with 17 significant digits (exact round trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| SdrError::Io(std::io::Error::other(e.to_string())))
}

/// Serializes a table with the given header; rows are written in order.
pub fn table_bytes<I, R>(header: &[String], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer();
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    finish(w)
}

pub fn samples_bytes(s: &SampleSet) -> Result<Vec<u8>> {
    let m = s.dim();
    let mut header: Vec<String> = (1..=m).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let x = s.inputs();
    let rows = (0..s.len()).map(|i| {
        (0..m)
            .map(|j| fmt_f64(x[(i, j)]))
            .chain(std::iter::once(fmt_f64(s.outputs()[i])))
            .collect::<Vec<_>>()
    });
    table_bytes(&header, rows)
}

pub fn write_samples(path: &Path, s: &SampleSet) -> Result<()> {
    write_atomic(path, &samples_bytes(s)?)
}

/// Parses `samples.csv` content. The result is not validated; callers run
/// [`crate::types::validate_sample_set`] on it.
pub fn parse_samples(bytes: &[u8]) -> Result<SampleSet> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let m = header.len().saturating_sub(1);
    let expected: Vec<String> = (1..=m)
        .map(|j| format!("x{j}"))
        .chain(std::iter::once("y".to_string()))
        .collect();
    if m == 0 || header != expected {
        return Err(SdrError::InvalidSampleSet(format!(
            "expected header x1,...,xm,y, got {}",
            header.join(",")
        )));
    }
    let mut values = Vec::new();
    let mut outputs = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != m + 1 {
            return Err(SdrError::InvalidSampleSet(format!(
                "row {i} has {} fields, expected {}",
                rec.len(),
                m + 1
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                SdrError::InvalidSampleSet(format!("row {i}, column {}: cannot parse '{field}'", j + 1))
            })?;
            if j < m {
                values.push(v);
            } else {
                outputs.push(v);
            }
        }
    }
    let n = outputs.len();
    let inputs = DMatrix::from_row_slice(n, m, &values);
    Ok(SampleSet::from_raw(inputs, outputs, false, None))
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    parse_samples(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn layout() {
        let s = SampleSet::from_rows(&[vec![1.0, 2.0]], vec![3.0]).unwrap();
        let text = String::from_utf8(samples_bytes(&s).unwrap()).unwrap();
        assert_eq!(
            text,
            "x1,x2,y\n1.0000000000000000e0,2.0000000000000000e0,3.0000000000000000e0\n"
        );
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(parse_samples(b"a,b\n1,2\n").is_err());
        assert!(parse_samples(b"x1,y\n1,nope\n").is_err());
    }
}
