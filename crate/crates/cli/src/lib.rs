//! Experiment harness around the `peelmap` core: configuration, replica
//! parallelism, slope fits and byte-stable CSV/JSON artifacts.

pub mod checks;
pub mod config;
pub mod modes;
pub mod output;
pub mod stats;

use std::path::PathBuf;

use serde_json::{json, Map, Value};
use thiserror::Error;

pub use config::{ExperimentConfig, Mode};
pub use output::Table;

pub const BUILD_ID: &str = env!("PEELMAP_BUILD_ID");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub mode: Mode,
    pub table: Table,
    pub summary: Value,
    pub pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        self.summary["pass"][name].as_bool()
    }

    pub fn result(&self, path: &[&str]) -> &Value {
        path.iter().fold(&self.summary["results"], |v, k| &v[*k])
    }
}

/// Validates and runs one experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mode = cfg.validate()?;
    let res = modes::run_mode(cfg, mode)?;
    let pass = res.pass();
    let mut summary = Map::new();
    summary.insert("build".into(), json!(BUILD_ID));
    summary.insert("mode".into(), json!(mode.name()));
    summary.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    if let Ok(m) = cfg.model() {
        summary.insert("constants".into(), modes::constants_json(&m));
    }
    summary.insert("results".into(), Value::Object(res.results));
    summary.insert("pass".into(), Value::Object(res.flags));
    summary.insert("all_pass".into(), json!(pass));
    Ok(Outcome {
        mode,
        table: res.table,
        summary: Value::Object(summary),
        pass,
    })
}

/// Runs and writes `<out>.csv`/`<out>.json`; without `--out` the summary goes
/// to stdout.
pub fn run(cfg: ExperimentConfig) -> Result<(Outcome, Option<(PathBuf, PathBuf)>), CliError> {
    let cfg = cfg.resolve()?;
    let outcome = execute(&cfg)?;
    let paths = match &cfg.out {
        Some(prefix) => Some(output::write_artifacts(prefix, &outcome.table, &outcome.summary)?),
        None => None,
    };
    Ok((outcome, paths))
}
