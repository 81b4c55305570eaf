//! Versioned output documents and their JSON/CSV encodings.

use std::io::Write;

use polarization::{BoundReport, Configuration, LEstimate, SearchResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub construction: String,
    pub y: Vec<f64>,
    pub achieved: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsentEntry {
    pub field: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTimings {
    pub bounds_ms: f64,
    pub sup_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub seed: u64,
    pub instance: Vec<Vec<f64>>,
    pub n: usize,
    pub lambda: Vec<f64>,
    pub a_diag: Vec<f64>,
    pub v_lengths: Option<Vec<f64>>,
    pub marcus: f64,
    pub harmonic: Option<f64>,
    pub thm1: Option<f64>,
    pub thm2: Option<f64>,
    pub thm3: Option<f64>,
    pub witnesses: Vec<WitnessEntry>,
    pub threshold: f64,
    pub sup_estimate: Option<f64>,
    pub absent: Vec<AbsentEntry>,
    pub timings: ReportTimings,
}

impl ReportDocument {
    pub fn new(seed: u64, config: &Configuration, report: &BoundReport, timings: ReportTimings) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            instance: config.to_rows(),
            n: report.n,
            lambda: report.eigenvalues.clone(),
            a_diag: report.a_diag.clone(),
            v_lengths: report.v_lengths.clone(),
            marcus: report.marcus(),
            harmonic: report.harmonic(),
            thm1: report.thm1_value(),
            thm2: report.thm2_value(),
            thm3: report.thm3_value(),
            witnesses: report
                .witnesses()
                .map(|w| WitnessEntry {
                    construction: w.construction.label().to_string(),
                    y: w.y.clone(),
                    achieved: w.achieved,
                })
                .collect(),
            threshold: report.threshold(),
            sup_estimate: report.sup_estimate,
            absent: report
                .absent
                .iter()
                .map(|(field, reason)| AbsentEntry {
                    field: field.clone(),
                    reason: reason.clone(),
                })
                .collect(),
            timings,
        }
    }

    /// Every defined bound by key.
    pub fn bounds(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("marcus", self.marcus)];
        for (k, v) in [("harmonic", self.harmonic), ("thm1", self.thm1), ("thm2", self.thm2), ("thm3", self.thm3)] {
            if let Some(v) = v {
                out.push((k, v));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub value: f64,
    pub gap: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchDocument {
    pub schema_version: u32,
    pub seed: u64,
    pub n: usize,
    pub budget: usize,
    pub iterations: usize,
    pub worst_config: Vec<Vec<f64>>,
    pub worst_sup: f64,
    pub search_sup: f64,
    pub threshold: f64,
    pub gap: f64,
    pub trace: Vec<TracePoint>,
    pub timings: SearchTimings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTimings {
    pub search_ms: f64,
}

impl SearchDocument {
    pub fn new(seed: u64, budget: usize, result: &SearchResult, search_ms: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            n: result.worst_config.dim(),
            budget,
            iterations: result.iterations,
            worst_config: result.worst_config.to_rows(),
            worst_sup: result.worst_sup,
            search_sup: result.search_sup,
            threshold: result.threshold,
            gap: result.gap(),
            trace: result
                .trace
                .iter()
                .map(|p| TracePoint {
                    iteration: p.iteration,
                    value: p.value,
                    gap: p.gap,
                    seed,
                })
                .collect(),
            timings: SearchTimings { search_ms },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LconstDocument {
    pub schema_version: u32,
    pub seed: u64,
    pub n: usize,
    pub samples: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub stderr: f64,
    pub constant: f64,
    pub timings: LconstTimings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LconstTimings {
    pub sampling_ms: f64,
}

impl LconstDocument {
    pub fn new(seed: u64, est: &LEstimate, sampling_ms: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            n: est.n,
            samples: est.samples,
            l: est.mean,
            stderr: est.stderr,
            constant: est.constant(),
            timings: LconstTimings { sampling_ms },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCount {
    pub property: String,
    pub checked: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyDocument {
    pub schema_version: u32,
    pub seed: u64,
    pub dimensions: Vec<usize>,
    pub count: usize,
    pub properties: Vec<PropertyCount>,
    pub failures: usize,
    pub failure_dump: Option<String>,
}

/// Parses a document, rejecting any schema version other than the current one.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let value: Value = serde_json::from_str(text)?;
    match value.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => Ok(serde_json::from_value(value)?),
        Some(v) => Err(CliError::Input(format!(
            "unsupported schema_version {v} (this build reads {SCHEMA_VERSION})"
        ))),
        None => Err(CliError::Input("document has no schema_version".into())),
    }
}

pub fn render<T: Serialize>(doc: &T, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", &serde_json::to_value(doc)?, &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["field", "value"])?;
            for (k, v) in rows {
                w.write_record([k, v])?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

/// `field,value` rows: nested keys joined with `.`, numeric arrays joined
/// with spaces, arrays of rows or objects indexed.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_array() && !v.is_object()) => {
            let joined: Vec<String> = items.iter().map(scalar).collect();
            out.push((prefix.to_string(), joined.join(" ")));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Search trace as `iteration,value,gap,seed`.
pub fn write_trace<W: Write>(trace: &[TracePoint], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for p in trace {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReportDocument {
        let config = Configuration::pair(1.0);
        let report = polarization::full_report(&config, None).unwrap();
        ReportDocument::new(
            4,
            &config,
            &report,
            ReportTimings {
                bounds_ms: 0.5,
                sup_ms: None,
            },
        )
    }

    #[test]
    fn report_round_trips() {
        let doc = sample();
        let text = render(&doc, Format::Json).unwrap();
        let back: ReportDocument = parse(&text).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn rejects_other_versions() {
        let text = render(&sample(), Format::Json).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(parse::<ReportDocument>(&text).is_err());
        assert!(parse::<ReportDocument>("{\"n\": 2}").is_err());
    }

    #[test]
    fn csv_flattens_nested_fields() {
        let csv = render(&sample(), Format::Csv).unwrap();
        assert!(csv.starts_with("field,value\n"));
        assert!(csv.contains("\nwitnesses.0.construction,thm1-averaging\n"));
        assert!(csv.contains("\nsup_estimate,\n"));
        assert!(csv.lines().any(|l| l.starts_with("instance.1,")));
    }

    #[test]
    fn trace_columns() {
        let mut buf = Vec::new();
        let t = [TracePoint {
            iteration: 1,
            value: 0.5,
            gap: 0.0,
            seed: 3,
        }];
        write_trace(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "iteration,value,gap,seed\n1,0.5,0.0,3\n");
    }
}
