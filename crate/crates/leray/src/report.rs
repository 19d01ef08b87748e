//! Structured experiment reports with deterministic serialization.
//!
//! JSON documents keep insertion key order and print every float with 17
//! significant digits, so identical configurations produce byte-identical
//! files; CSV emits one header plus one line per row. Writes go through a
//! temp file and rename, leaving no partial reports behind.

use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

/// One serializable value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl Value {
    fn json(&self, out: &mut String) {
        match self {
            Value::F(x) => push_f64(out, *x),
            Value::I(n) => {
                let _ = write!(out, "{n}");
            }
            Value::S(s) => push_str_escaped(out, s),
            Value::B(b) => {
                let _ = write!(out, "{b}");
            }
        }
    }

    fn csv(&self, out: &mut String) {
        match self {
            Value::F(x) => push_f64(out, *x),
            Value::I(n) => {
                let _ = write!(out, "{n}");
            }
            Value::S(s) => {
                let _ = write!(out, "{s}");
            }
            Value::B(b) => {
                let _ = write!(out, "{b}");
            }
        }
    }
}

/// 17 significant digits reproduce every f64 bit pattern exactly.
fn push_f64(out: &mut String, x: f64) {
    if x.is_nan() {
        out.push_str("\"nan\"");
    } else if x.is_infinite() {
        out.push_str(if x > 0.0 { "\"inf\"" } else { "\"-inf\"" });
    } else {
        let _ = write!(out, "{x:.16e}");
    }
}

fn push_str_escaped(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// A row of named values; every row of a report shares the same keys.
pub type Row = Vec<(&'static str, Value)>;

/// One pass/fail check with its explicit tolerance.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    /// |value − target| ≤ tolerance.
    pub fn within(id: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        CheckResult {
            id: id.into(),
            value,
            target,
            tolerance,
            pass: (value - target).abs() <= tolerance,
        }
    }

    /// value ≥ target.
    pub fn at_least(id: impl Into<String>, value: f64, target: f64) -> Self {
        CheckResult {
            id: id.into(),
            value,
            target,
            tolerance: 0.0,
            pass: value >= target,
        }
    }

    /// value ≤ target.
    pub fn at_most(id: impl Into<String>, value: f64, target: f64) -> Self {
        CheckResult {
            id: id.into(),
            value,
            target,
            tolerance: 0.0,
            pass: value <= target,
        }
    }
}

/// Least-squares power-law fit on log-log axes.
#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Structured result of one experiment run.
#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub experiment: String,
    /// echoed configuration, key order preserved
    pub config: Vec<(&'static str, Value)>,
    pub config_hash: String,
    pub version: String,
    pub rows: Vec<Row>,
    pub fit: Option<FitResult>,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, config: Vec<(&'static str, Value)>) -> Self {
        let mut r = ExperimentReport {
            experiment: experiment.into(),
            config,
            version: crate::VERSION.to_string(),
            ..Default::default()
        };
        r.config_hash = r.hash_config();
        r
    }

    /// Replace the echoed configuration and rehash.
    pub fn set_config(&mut self, config: Vec<(&'static str, Value)>) {
        self.config = config;
        self.config_hash = self.hash_config();
    }

    /// FNV-1a over the canonical config text.
    fn hash_config(&self) -> String {
        let mut text = String::new();
        text.push_str(&self.experiment);
        for (k, v) in &self.config {
            text.push(';');
            text.push_str(k);
            text.push('=');
            v.json(&mut text);
        }
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One JSON document with stable key order.
    pub fn to_json(&self) -> String {
        let mut o = String::with_capacity(4096);
        o.push_str("{\n  \"experiment\": ");
        push_str_escaped(&mut o, &self.experiment);
        o.push_str(",\n  \"version\": ");
        push_str_escaped(&mut o, &self.version);
        o.push_str(",\n  \"config_hash\": ");
        push_str_escaped(&mut o, &self.config_hash);
        o.push_str(",\n  \"config\": {");
        for (i, (k, v)) in self.config.iter().enumerate() {
            if i > 0 {
                o.push(',');
            }
            o.push_str("\n    ");
            push_str_escaped(&mut o, k);
            o.push_str(": ");
            v.json(&mut o);
        }
        o.push_str("\n  },\n  \"rows\": [");
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                o.push(',');
            }
            o.push_str("\n    {");
            for (j, (k, v)) in row.iter().enumerate() {
                if j > 0 {
                    o.push_str(", ");
                }
                push_str_escaped(&mut o, k);
                o.push_str(": ");
                v.json(&mut o);
            }
            o.push('}');
        }
        o.push_str("\n  ]");
        if let Some(fit) = &self.fit {
            o.push_str(",\n  \"fit\": {\"slope\": ");
            push_f64(&mut o, fit.slope);
            o.push_str(", \"intercept\": ");
            push_f64(&mut o, fit.intercept);
            o.push_str(", \"residual\": ");
            push_f64(&mut o, fit.residual);
            o.push('}');
            o.push_str(",\n  \"slope\": ");
            push_f64(&mut o, fit.slope);
        }
        if let Some(target) = self.checks.iter().find(|c| c.id.starts_with("slope")) {
            o.push_str(",\n  \"target\": ");
            push_f64(&mut o, target.target);
            o.push_str(",\n  \"tolerance\": ");
            push_f64(&mut o, target.tolerance);
        }
        o.push_str(",\n  \"checks\": [");
        for (i, c) in self.checks.iter().enumerate() {
            if i > 0 {
                o.push(',');
            }
            o.push_str("\n    {\"id\": ");
            push_str_escaped(&mut o, &c.id);
            o.push_str(", \"value\": ");
            push_f64(&mut o, c.value);
            o.push_str(", \"target\": ");
            push_f64(&mut o, c.target);
            o.push_str(", \"tolerance\": ");
            push_f64(&mut o, c.tolerance);
            let _ = write!(o, ", \"pass\": {}}}", c.pass);
        }
        o.push_str("\n  ],\n  \"notes\": [");
        for (i, n) in self.notes.iter().enumerate() {
            if i > 0 {
                o.push_str(", ");
            }
            push_str_escaped(&mut o, n);
        }
        let _ = write!(o, "],\n  \"all_pass\": {}\n}}\n", self.all_pass());
        o
    }

    /// CSV: header from the first row's keys, one line per row.
    pub fn to_csv(&self) -> String {
        let mut o = String::new();
        if let Some(first) = self.rows.first() {
            for (i, (k, _)) in first.iter().enumerate() {
                if i > 0 {
                    o.push(',');
                }
                o.push_str(k);
            }
            o.push('\n');
            for row in &self.rows {
                for (i, (_, v)) in row.iter().enumerate() {
                    if i > 0 {
                        o.push(',');
                    }
                    v.csv(&mut o);
                }
                o.push('\n');
            }
        }
        o
    }

    /// Write-then-rename so failures leave no partial report.
    pub fn write(&self, path: &Path, format: ReportFormat) -> Result<()> {
        let body = match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        };
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, body)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(ReportFormat::Json),
            "csv" => Some(ReportFormat::Csv),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "demo",
            vec![("family", Value::S("quad".into())), ("p", Value::F(2.0))],
        );
        r.rows.push(vec![
            ("delta", Value::F(0.1)),
            ("ratio", Value::F(1.0 / 3.0)),
        ]);
        r.rows.push(vec![
            ("delta", Value::F(0.05)),
            ("ratio", Value::F(2.0 / 3.0)),
        ]);
        r.fit = Some(FitResult {
            slope: -0.5,
            intercept: 1.25,
            residual: 1e-3,
        });
        r.checks.push(CheckResult::within("slope", -0.5, -0.5, 0.1));
        r
    }

    #[test]
    fn json_is_valid_and_deterministic() {
        let r = sample_report();
        let a = r.to_json();
        let b = r.to_json();
        assert_eq!(a, b);
        // parse back with an independent JSON implementation
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["experiment"], "demo");
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
        assert!((v["rows"][1]["ratio"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-16);
        assert_eq!(v["all_pass"], true);
        assert_eq!(v["slope"].as_f64().unwrap(), -0.5);
    }

    #[test]
    fn float_digits_roundtrip() {
        for &x in &[std::f64::consts::PI, 1.0 / 3.0, 7.0364e-8, -0.501256289] {
            let mut s = String::new();
            push_f64(&mut s, x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_schema() {
        let r = sample_report();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "delta,ratio");
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn write_then_rename() {
        let dir = std::env::temp_dir().join("leray-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.json");
        sample_report().write(&path, ReportFormat::Json).unwrap();
        assert!(path.exists());
        assert!(!dir.join("out.tmp").exists());
        std::fs::remove_dir_all(&dir).unwrap();

        let bad = Path::new("/nonexistent-dir-xyz/out.json");
        assert!(sample_report().write(bad, ReportFormat::Json).is_err());
    }

    #[test]
    fn config_hash_tracks_config() {
        let a = ExperimentReport::new("x", vec![("p", Value::F(2.0))]);
        let b = ExperimentReport::new("x", vec![("p", Value::F(4.0))]);
        assert_ne!(a.config_hash, b.config_hash);
        let c = ExperimentReport::new("x", vec![("p", Value::F(2.0))]);
        assert_eq!(a.config_hash, c.config_hash);
    }
}
