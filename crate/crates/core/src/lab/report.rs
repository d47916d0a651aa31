use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{ExperimentConfig, ExperimentId, ReportFormat};
use crate::error::{Error, Result};
use crate::lorentz_ideal::{IdealParameter, NormConvention};
use crate::qc_estimator::EstimatorSeries;

pub const CSV_HEADER: [&str; 12] = [
    "experiment",
    "case",
    "p",
    "convention",
    "L",
    "L_prime",
    "m",
    "value",
    "expected",
    "observed_ratio",
    "tolerance",
    "verdict",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Recorded without a pass/fail claim.
    Probe,
    /// Nothing to measure, e.g. an empty set.
    Vacuous,
    Skipped,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Probe => "probe",
            Verdict::Vacuous => "vacuous",
            Verdict::Skipped => "skipped",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// How `observed` is compared with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `|observed − expected| ≤ tolerance·|expected|`.
    Relative,
    /// `observed ≥ expected − tolerance`.
    AtLeast,
    /// `observed ≤ expected + tolerance`.
    AtMost,
    /// `observed < expected`.
    Below,
    /// Informational.
    Probe,
}

impl Rule {
    pub fn judge(self, observed: f64, expected: f64, tolerance: f64) -> Verdict {
        if !observed.is_finite() || !expected.is_finite() {
            return match self {
                Rule::Probe => Verdict::Probe,
                _ => Verdict::Fail,
            };
        }
        match self {
            Rule::Relative => Verdict::from_bool((observed - expected).abs() <= tolerance * expected.abs().max(f64::MIN_POSITIVE)),
            Rule::AtLeast => Verdict::from_bool(observed >= expected - tolerance),
            Rule::AtMost => Verdict::from_bool(observed <= expected + tolerance),
            Rule::Below => Verdict::from_bool(observed < expected),
            Rule::Probe => Verdict::Probe,
        }
    }
}

/// One derived quantity with its expectation and verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub experiment: ExperimentId,
    pub case: String,
    pub p: IdealParameter,
    pub convention: Option<NormConvention>,
    pub level: Option<usize>,
    pub ambient: Option<usize>,
    pub m: Option<usize>,
    pub value: f64,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub rule: Rule,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSeries {
    pub case: String,
    pub series: EstimatorSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: ExperimentId,
    pub series: Vec<CaseSeries>,
    pub rows: Vec<RatioRow>,
    pub notes: Vec<String>,
    /// Kept out of serialized reports so they stay byte-identical.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl ExperimentReport {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Fail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub experiments: Vec<ExperimentReport>,
}

impl EstimateReport {
    pub fn failed(&self) -> bool {
        self.experiments.iter().any(ExperimentReport::failed)
    }

    pub fn rows(&self) -> impl Iterator<Item = &RatioRow> {
        self.experiments.iter().flat_map(|e| e.rows.iter())
    }
}

/// Twelve significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.11e}")
}

fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            format_number(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_numbers).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_numbers(v))).collect()),
        other => other,
    }
}

/// The report as a JSON tree with every float rounded to the written
/// precision; re-reading a written report yields exactly this value.
pub fn report_value(report: &EstimateReport) -> Result<Value> {
    let v = serde_json::to_value(report).map_err(|e| Error::input(e.to_string()))?;
    Ok(round_numbers(v))
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => out.push_str(&format_number(x)),
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.iter().all(|v| !v.is_array() && !v.is_object()) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}]", pad(indent));
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), Value::String((*k).clone()));
                write_value(out, &map[*k], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}}}", pad(indent));
        }
    }
}

/// Sorted keys, two-space indent, floats in `{:.11e}` form.
pub fn to_json(report: &EstimateReport) -> Result<String> {
    let mut out = String::new();
    write_value(&mut out, &report_value(report)?, 0);
    out.push('\n');
    Ok(out)
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn to_csv(report: &EstimateReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::input(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in report.rows() {
        w.write_record([
            r.experiment.to_string(),
            r.case.clone(),
            match r.p {
                IdealParameter::Finite(p) => format_number(p),
                IdealParameter::Infinity => "inf".into(),
            },
            opt(r.convention),
            opt(r.level),
            opt(r.ambient),
            opt(r.m),
            format_number(r.value),
            format_number(r.expected),
            format_number(r.observed),
            format_number(r.tolerance),
            r.verdict.as_str().to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::input(e.to_string()))
}

pub fn render(report: &EstimateReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => to_json(report),
        ReportFormat::Csv => to_csv(report),
    }
}

pub fn write_report(report: &EstimateReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render(report, format)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
