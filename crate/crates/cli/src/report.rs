//! The JSON verification report.

use std::fmt::Display;

use serde::{Deserialize, Serialize};

use crate::config::BundleConfig;

/// Schema tag written into every report.
pub const REPORT_SCHEMA: &str = "projflat.report/1";

/// Failure messages kept per record; the rest are only counted.
const MAX_DIAGNOSTICS: usize = 5;

/// Outcome of one check over its sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    /// Points evaluated (including failed ones).
    pub points: usize,
    /// Points where the quantity could not be evaluated or a hard condition failed.
    pub failures: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub diagnostics: Vec<String>,
}

/// The whole report. `pass` is true iff every record passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub seed: u64,
    pub tol_scale: f64,
    pub bundle: BundleConfig,
    pub records: Vec<Record>,
    pub flags: Vec<String>,
    pub pass: bool,
}

impl Report {
    pub fn new(bundle: BundleConfig, seed: u64, tol_scale: f64, records: Vec<Record>, flags: Vec<String>) -> Self {
        let pass = !records.is_empty() && records.iter().all(|r| r.pass);
        Self { schema: REPORT_SCHEMA.to_string(), seed, tol_scale, bundle, records, flags, pass }
    }

    pub fn record(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }

    /// Pretty JSON with a trailing newline. Stable for identical inputs.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per record, for the terminal.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!(
                "{:<24} {:>5} pts  max {:<12.3e} tol {:<9.1e} {}\n",
                r.name,
                r.points,
                r.max_residual,
                r.tolerance,
                if r.pass { "ok" } else { "FAIL" }
            ));
        }
        for f in &self.flags {
            out.push_str(&format!("flag: {f}\n"));
        }
        out.push_str(if self.pass { "overall: pass\n" } else { "overall: FAIL\n" });
        out
    }
}

/// Accumulates one record. A point fails if it errors or its residual is not
/// finite; the record passes if nothing failed and the max residual is within
/// tolerance.
#[derive(Debug)]
pub struct RecordBuilder {
    rec: Record,
    dropped: usize,
    worst_at: Option<String>,
}

impl RecordBuilder {
    pub fn new(name: &str, tolerance: f64) -> Self {
        Self {
            rec: Record {
                name: name.to_string(),
                points: 0,
                failures: 0,
                max_residual: 0.0,
                tolerance,
                pass: false,
                diagnostics: Vec::new(),
            },
            dropped: 0,
            worst_at: None,
        }
    }

    /// Records a residual; `at` describes the point and is only formatted when needed.
    pub fn observe<E: Display>(&mut self, value: Result<f64, E>, at: impl FnOnce() -> String) {
        self.rec.points += 1;
        match value {
            Ok(v) if v.is_finite() => {
                if v > self.rec.max_residual || self.worst_at.is_none() {
                    self.rec.max_residual = self.rec.max_residual.max(v);
                    self.worst_at = Some(at());
                }
            }
            Ok(v) => self.fail(format!("{}: non-finite residual {v}", at())),
            Err(e) => self.fail(format!("{}: {e}", at())),
        }
    }

    /// Counts a failed point with a message.
    pub fn fail(&mut self, msg: String) {
        self.rec.failures += 1;
        self.note(msg);
    }

    /// Adds a diagnostic without affecting pass/fail.
    pub fn note(&mut self, msg: String) {
        if self.rec.diagnostics.len() < MAX_DIAGNOSTICS {
            self.rec.diagnostics.push(msg);
        } else {
            self.dropped += 1;
        }
    }

    pub fn finish(mut self) -> Record {
        let r = &mut self.rec;
        r.pass = r.points > 0 && r.failures == 0 && r.max_residual <= r.tolerance;
        if r.points == 0 {
            r.diagnostics.push("no points evaluated".into());
        }
        if self.dropped > 0 {
            r.diagnostics.push(format!("{} more diagnostics omitted", self.dropped));
        }
        if let Some(at) = self.worst_at {
            if r.points > r.failures {
                r.diagnostics.push(format!("worst at {at}"));
            }
        }
        self.rec
    }
}
