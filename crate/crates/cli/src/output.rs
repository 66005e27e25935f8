//! CSV tables and the JSON run summary.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(&row)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `summary.json` and returns its path.
    pub fn summary(&mut self, summary: &Summary) -> Result<PathBuf, CliError> {
        let files: Vec<String> =
            self.written.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
        let value = json!({
            "command": summary.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": summary.config,
            "threads": summary.threads,
            "converged": summary.converged,
            "warnings": summary.warnings,
            "files": files,
            "results": summary.results,
        });
        let path = self.dir.join("summary.json");
        std::fs::write(&path, serde_json::to_string_pretty(&value)? + "\n")?;
        Ok(path)
    }
}

pub struct Summary {
    pub command: &'static str,
    pub config: Value,
    pub threads: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub results: Value,
}

impl Summary {
    pub fn new(command: &'static str, config: &impl Serialize, threads: usize) -> Result<Self, CliError> {
        Ok(Self {
            command,
            config: serde_json::to_value(config)?,
            threads,
            converged: true,
            warnings: Vec::new(),
            results: Value::Null,
        })
    }
}

/// Shortest round-trip form; exponent notation outside `1e-5..1e16`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
