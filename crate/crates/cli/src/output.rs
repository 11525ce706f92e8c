//! Byte-stable artifacts: CSV with 17 significant digits, JSON with sorted keys.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Table {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

pub fn json_bytes(summary: &Value) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_string_pretty(summary).map_err(io)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Writes `<prefix>.csv` and `<prefix>.json`, returning both paths.
pub fn write_artifacts(prefix: &Path, table: &Table, summary: &Value) -> Result<(PathBuf, PathBuf), CliError> {
    let csv_path = with_suffix(prefix, "csv");
    let json_path = with_suffix(prefix, "json");
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(&csv_path, table.to_bytes()?).map_err(io)?;
    fs::write(&json_path, json_bytes(summary)?).map_err(io)?;
    Ok((csv_path, json_path))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}
