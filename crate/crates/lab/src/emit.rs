//! CSV and JSON tables.
//!
//! CSV floats use the shortest representation that parses back to the same
//! value; the header is written even for an empty table.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::Format;
use crate::error::{LabError, Result};

/// Incremental CSV writer that flushes after every row.
pub struct CsvSink<W: Write> {
    inner: csv::Writer<W>,
    path: PathBuf,
}

impl<W: Write> std::fmt::Debug for CsvSink<W> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CsvSink").field("path", &self.path).finish_non_exhaustive()
    }
}

impl CsvSink<BufWriter<File>> {
    pub fn create(path: &Path, columns: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| LabError::io(path, e))?;
        Self::new(BufWriter::new(file), path, columns)
    }
}

impl<W: Write> CsvSink<W> {
    pub fn new(writer: W, path: &Path, columns: &[&str]) -> Result<Self> {
        let mut sink = Self {
            inner: csv::WriterBuilder::new().has_headers(false).from_writer(writer),
            path: path.to_path_buf(),
        };
        sink.inner.write_record(columns).map_err(|e| sink.csv_err(e))?;
        sink.flush()?;
        Ok(sink)
    }

    fn csv_err(&self, source: csv::Error) -> LabError {
        LabError::Csv {
            path: self.path.clone(),
            source,
        }
    }

    pub fn push<T: Serialize>(&mut self, row: &T) -> Result<()> {
        self.inner.serialize(row).map_err(|e| self.csv_err(e))?;
        self.flush()
    }

    fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| LabError::io(&self.path, e))
    }

    pub fn into_inner(self) -> Result<W> {
        let path = self.path.clone();
        self.inner
            .into_inner()
            .map_err(|e| LabError::io(path, std::io::Error::other(e.to_string())))
    }
}

pub fn write_csv<T: Serialize>(rows: &[T], columns: &[&str], path: &Path) -> Result<()> {
    let mut sink = CsvSink::create(path, columns)?;
    for r in rows {
        sink.push(r)?;
    }
    Ok(())
}

/// Rows as a pretty-printed JSON array of objects. `NaN` becomes `null`.
pub fn write_json<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, rows).map_err(|source| LabError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| LabError::io(path, e))
}

pub fn emit<T: Serialize>(rows: &[T], columns: &[&str], format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Csv => write_csv(rows, columns, path),
        Format::Json => write_json(rows, path),
    }
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let err = |source| LabError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(err)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| LabError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{ExperimentRow, RowStatus};

    fn row(n: usize) -> ExperimentRow {
        let x = 0.1 + n as f64 / 3.0;
        ExperimentRow {
            n,
            eps: 0.125 / (1u64 << n) as f64,
            delta: 0.25 * 0.5f64.powf(0.5 * n as f64),
            eps_over_delta_three_halves: x,
            energy: std::f64::consts::PI * x,
            homogenized_energy: 3.266_180_339_887_5,
            discrepancy: 1e-7 / 3.0,
            poincare_bound: 1.0e300 / 7.0,
            boundary_term: 5e-324,
            dirichlet_budget: 1.0 / 3.0,
            perimeter: 0.1 + 0.2,
            face_perimeter: 1.0,
            sharp_energy: 2f64.sqrt(),
            l1_to_projection: f64::EPSILON,
            cells: 32,
            steps: 17,
            residual: 9.99e-10,
            status: RowStatus::Ok,
            message: String::new(),
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv::<ExperimentRow>(&[], ExperimentRow::COLUMNS, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", ExperimentRow::COLUMNS.join(",")));
        assert!(read_csv::<ExperimentRow>(&path).unwrap().is_empty());
    }

    #[test]
    fn one_row_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&[row(3)], ExperimentRow::COLUMNS, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        assert_eq!(read_csv::<ExperimentRow>(&path).unwrap(), vec![row(3)]);
    }

    #[test]
    fn header_matches_serialized_fields() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(row(0)).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), ExperimentRow::COLUMNS.join(","));
    }

    #[test]
    fn csv_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<ExperimentRow> = (0..4).map(row).collect();
        let (c, j) = (dir.path().join("t.csv"), dir.path().join("t.json"));
        emit(&rows, ExperimentRow::COLUMNS, Format::Csv, &c).unwrap();
        emit(&rows, ExperimentRow::COLUMNS, Format::Json, &j).unwrap();
        let from_csv: Vec<ExperimentRow> = read_csv(&c).unwrap();
        let from_json: Vec<ExperimentRow> = read_json(&j).unwrap();
        assert_eq!(from_csv, rows);
        assert_eq!(from_json, rows);
    }

    #[test]
    fn failed_rows_survive_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = row(1);
        r.energy = f64::NAN;
        r.status = RowStatus::Failed;
        r.message = "step size underflow, after 3 steps".into();
        let (c, j) = (dir.path().join("t.csv"), dir.path().join("t.json"));
        write_csv(std::slice::from_ref(&r), ExperimentRow::COLUMNS, &c).unwrap();
        write_json(std::slice::from_ref(&r), &j).unwrap();
        for back in [read_csv::<ExperimentRow>(&c).unwrap(), read_json(&j).unwrap()] {
            assert!(back[0].energy.is_nan());
            assert_eq!(back[0].message, r.message);
            assert_eq!(back[0].status, RowStatus::Failed);
        }
    }

    #[test]
    fn unwritable_paths_name_the_path() {
        let e = write_csv::<ExperimentRow>(&[], ExperimentRow::COLUMNS, Path::new("/nonexistent/dir/t.csv"))
            .unwrap_err();
        assert!(e.to_string().contains("/nonexistent/dir/t.csv"));
    }
}
