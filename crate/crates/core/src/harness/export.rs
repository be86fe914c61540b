use std::fmt::Write as _;
use std::path::Path;

use super::experiment::{ExperimentResult, MethodResult};
use crate::error::{Error, Result};

/// A parsed CSV file: header plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn trajectory_headers(r: &ExperimentResult) -> Vec<String> {
    let n = r.state_dim();
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("z{i}")));
    for m in &r.methods {
        h.extend((1..=n).map(|i| format!("zhat_{}_{i}", m.method)));
        h.extend((1..=n).map(|i| format!("e_{}_{i}", m.method)));
    }
    h
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Writes `t, z, zhat_<method>, e_<method>` with one row per time sample.
/// Values use the shortest round-trip representation.
pub fn export_csv(r: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(trajectory_headers(r))
        .map_err(|e| csv_err(path, e))?;
    let n = r.state_dim();
    let mut record = Vec::new();
    for (k, t) in r.times.iter().enumerate() {
        record.clear();
        record.push(t.to_string());
        record.extend((0..n).map(|i| r.truth[(k, i)].to_string()));
        for m in &r.methods {
            record.extend((0..n).map(|i| m.estimates[(k, i)].to_string()));
            record.extend((0..n).map(|i| (r.truth[(k, i)] - m.estimates[(k, i)]).to_string()));
        }
        w.write_record(&record).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the subsampled weight log of one method, `t, w_<row>_<col>`.
pub fn export_weights_csv(m: &MethodResult, path: &Path) -> Result<()> {
    let log = &m.weights;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["t".to_string()];
    for col in 0..log.output_dim {
        header.extend((0..log.hidden_dim).map(|row| format!("w_{}_{}", row + 1, col + 1)));
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (t, values) in log.times.iter().zip(&log.values) {
        let rec = std::iter::once(t.to_string()).chain(values.iter().map(f64::to_string));
        w.write_record(rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = rec
            .iter()
            .map(|v| {
                v.parse::<f64>().map_err(|_| Error::Format {
                    path: path.to_path_buf(),
                    message: format!("row {}: '{v}' is not a number", line + 1),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { headers, rows })
}

/// Plain-text RMSE table, one row per labelled run.
pub fn summary_table(cases: &[(&str, &ExperimentResult)]) -> String {
    let mut out = String::new();
    let methods: Vec<_> = cases
        .first()
        .map(|(_, r)| r.methods.iter().map(|m| m.method).collect())
        .unwrap_or_default();
    if methods.is_empty() {
        out.push_str("warning: no estimation methods configured, truth only\n");
    }
    let _ = write!(out, "{:<24}", "case");
    for m in &methods {
        let _ = write!(out, " {:>16}", m.as_str());
    }
    out.push('\n');
    for (label, r) in cases {
        let _ = write!(out, "{label:<24}");
        if methods.is_empty() {
            let _ = write!(out, " {} samples", r.times.len());
        }
        for &m in &methods {
            let cell = match r.method(m) {
                Some(res) => match (res.rmse, res.diverged) {
                    (Some(v), _) => format!("{v:.6}"),
                    (None, Some((t, _))) => format!("diverged@{t:.4}"),
                    (None, None) => "n/a".into(),
                },
                None => "-".into(),
            };
            let _ = write!(out, " {cell:>16}");
        }
        out.push('\n');
    }
    out
}
