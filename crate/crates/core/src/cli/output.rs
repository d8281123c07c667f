use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{ExperimentConfig, Format};
use crate::error::{Error, Result};

/// One named pass/fail check of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The checked quantity (a maximum, a count, ...).
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed: value <= tolerance, value, tolerance }
    }

    /// A boolean finding, recorded as 1 (holds) or 0.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self { name: name.into(), passed: ok, value: if ok { 1.0 } else { 0.0 }, tolerance: 1.0 }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub checks: Vec<Check>,
    pub stats: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub records: Vec<Value>,
    pub summary: Summary,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<f64>,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig, records: Vec<Value>, summary: Summary) -> Self {
        let passed = summary.checks.iter().all(|c| c.passed);
        Self { tool: "sepent", version: env!("CARGO_PKG_VERSION"), config: config.clone(), records, summary, passed, duration_ms: None }
    }
}

/// Starts a record with its trial index and stream id.
pub(crate) fn record(trial: usize, stream_id: u64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("trial".into(), trial.into());
    m.insert("stream_id".into(), stream_id.into());
    m
}

pub fn render(report: &RunReport, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Internal(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => Ok(to_csv(&report.records)),
    }
}

/// Scalar fields of every record as columns. Numbers are written exactly as
/// in the JSON report.
fn to_csv(records: &[Value]) -> String {
    let mut columns: Vec<String> = Vec::new();
    for r in records {
        if let Value::Object(m) = r {
            for (k, v) in m {
                if !matches!(v, Value::Array(_) | Value::Object(_)) && !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
    }
    let mut out = columns.join(",");
    out.push('\n');
    for r in records {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| match r.get(c) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(s)) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
