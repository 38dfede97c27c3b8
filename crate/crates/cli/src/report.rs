//! Structured run reports: one record per check, each carrying its
//! numeric results, tolerance and method string. JSON output is
//! deterministic (fixed field order, no timestamps in the document) so
//! reruns with the same config and seed are byte-identical.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "hypolie-report/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    /// short digest of what went in (matrices, function names, radii)
    pub inputs: String,
    /// numeric results keyed by stable names
    pub results: Vec<(String, Value)>,
    pub tolerance: Option<f64>,
    pub method: String,
    pub verdict: Verdict,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub toolkit_version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub verdict: Verdict,
}

impl Report {
    pub fn new(command: &str, config_raw: &str, seed: u64) -> Report {
        let mut hasher = Sha256::new();
        hasher.update(config_raw.as_bytes());
        Report {
            schema: SCHEMA,
            toolkit_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: hex::encode(hasher.finalize()),
            seed,
            checks: Vec::new(),
            verdict: Verdict::Pass,
        }
    }

    pub fn push(&mut self, check: CheckOutcome) {
        if check.verdict == Verdict::Fail {
            self.verdict = Verdict::Fail;
        }
        self.checks.push(check);
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Fail => 1,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} — {}", self.command, verdict_str(self.verdict));
        let _ = writeln!(
            out,
            "toolkit {} | seed {} | config sha256 {}",
            self.toolkit_version,
            self.seed,
            &self.config_sha256[..12.min(self.config_sha256.len())]
        );
        for check in &self.checks {
            let _ = writeln!(out, "  [{}] {}", verdict_str(check.verdict), check.name);
            if !check.inputs.is_empty() {
                let _ = writeln!(out, "      inputs: {}", check.inputs);
            }
            for (key, value) in &check.results {
                let _ = writeln!(out, "      {}: {}", key, render_value(value));
            }
            if let Some(tol) = check.tolerance {
                let _ = writeln!(out, "      tolerance: {}", tol);
            }
            let _ = writeln!(out, "      method: {}", check.method);
        }
        out
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::Info => "info",
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Helper: numeric result entry.
pub fn num(key: &str, value: f64) -> (String, Value) {
    (key.to_string(), serde_json::json!(value))
}

pub fn text(key: &str, value: &str) -> (String, Value) {
    (key.to_string(), Value::String(value.to_string()))
}

pub fn flag(key: &str, value: bool) -> (String, Value) {
    (key.to_string(), Value::Bool(value))
}

pub fn list(key: &str, values: &[f64]) -> (String, Value) {
    (key.to_string(), serde_json::json!(values))
}
