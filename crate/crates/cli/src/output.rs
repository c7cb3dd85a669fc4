//! Run summaries, named checks and CSV tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "==")]
    Holds,
}

/// A named pass/fail outcome with the measured value and its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: value <= threshold, value, relation: Relation::AtMost, threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: value >= threshold, value, relation: Relation::AtLeast, threshold }
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: value < threshold, value, relation: Relation::Below, threshold }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> [Self; 2] {
        let name = name.into();
        [Check::at_least(format!("{name}.min"), value, lo), Check::at_most(format!("{name}.max"), value, hi)]
    }

    /// Boolean outcome; the value is 1 when the property holds.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), pass: ok, value: if ok { 1.0 } else { 0.0 }, relation: Relation::Holds, threshold: 1.0 }
    }
}

/// A CSV file held in memory until the run finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file_name: &str, header: &[&str]) -> Self {
        Table { file_name: file_name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::io("<buffer>", e.into_error()))
    }
}

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    if v == 0.0 || (1e-4..1e15).contains(&v.abs()) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Everything a command produced, before it is written out.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub checks: Vec<Check>,
    pub scalars: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
}

impl RunOutput {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn scalar(&mut self, name: impl Into<String>, v: f64) {
        self.scalars.insert(name.into(), v);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub command: String,
    pub status: String,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub scalars: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
}

impl RunSummary {
    pub fn new(config: &ExperimentConfig, out: &RunOutput) -> Self {
        let mut artifacts: Vec<String> = out.tables.iter().map(|t| t.file_name.clone()).collect();
        artifacts.push("summary.json".into());
        RunSummary {
            schema_version: SCHEMA_VERSION,
            command: config.command.name().into(),
            status: if out.passed() { "pass" } else { "fail" }.into(),
            config: config.clone(),
            checks: out.checks.clone(),
            scalars: out.scalars.clone(),
            artifacts,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes every table and `summary.json` into `dir`, creating it if needed.
pub fn emit_outputs(dir: &Path, summary: &RunSummary, tables: &[Table]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for t in tables {
        write(&dir.join(&t.file_name), &t.to_csv()?)?;
    }
    let mut json = serde_json::to_vec_pretty(summary)?;
    json.push(b'\n');
    write(&dir.join("summary.json"), &json)
}

/// Best-effort `error.json` next to the other outputs.
pub fn emit_error(dir: &Path, err: &CliError) {
    if fs::create_dir_all(dir).is_ok() {
        if let Ok(mut bytes) = serde_json::to_vec_pretty(&err.record()) {
            bytes.push(b'\n');
            let _ = fs::write(dir.join("error.json"), bytes);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("x.csv", &["time", "value", "path"]);
        assert_eq!(t.to_csv().unwrap(), b"time,value,path\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -2.5e-7, 3.14159, 1e20, 0.1 + 0.2] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
