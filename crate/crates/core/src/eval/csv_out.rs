//! Result rows and the single CSV appender they are written through.

use std::fs::{File, OpenOptions};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

/// One (method, env, k, seed) result. Optional fields are written empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub env: String,
    pub k_true: usize,
    pub k_given: usize,
    pub seed: u64,
    pub avg_reward: f64,
    pub scaled_reward: Option<f64>,
    pub action_mse: f64,
    pub cmr_error: Option<f64>,
    pub gap_bound: Option<f64>,
    pub gap_measured: Option<f64>,
    /// Wall time; only filled when timing is enabled, which makes rows
    /// non-reproducible.
    pub runtime_s: Option<f64>,
}

pub const CSV_HEADER: [&str; 12] = [
    "method",
    "env",
    "k_true",
    "k_given",
    "seed",
    "avg_reward",
    "scaled_reward",
    "action_mse",
    "cmr_error",
    "gap_bound",
    "gap_measured",
    "runtime_s",
];

/// Appends rows to a CSV file, writing the header only for a new file.
pub struct CsvAppender {
    writer: csv::Writer<File>,
    rows: usize,
}

impl CsvAppender {
    pub fn open(path: &Path) -> Result<Self> {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if fresh {
            writer.write_record(CSV_HEADER)?;
            writer.flush()?;
        }
        Ok(Self { writer, rows: 0 })
    }

    pub fn append(&mut self, row: &ResultRow) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        self.rows += 1;
        Ok(())
    }

    /// Rows written through this appender.
    pub fn rows(&self) -> usize {
        self.rows
    }
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64) -> ResultRow {
        ResultRow {
            method: "bc".into(),
            env: "plane, ticket".into(),
            k_true: 1,
            k_given: 1,
            seed,
            avg_reward: -1.5,
            scaled_reward: Some(0.25),
            action_mse: 0.1,
            cmr_error: None,
            gap_bound: None,
            gap_measured: None,
            runtime_s: None,
        }
    }

    #[test]
    fn header_once_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        CsvAppender::open(&p).unwrap().append(&row(1)).unwrap();
        CsvAppender::open(&p).unwrap().append(&row(2)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("method,")).count(), 1);
        assert!(text.contains("\"plane, ticket\""));
        assert_eq!(read_rows(&p).unwrap(), vec![row(1), row(2)]);
    }
}
