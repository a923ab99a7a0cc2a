//! Run summaries: per-check verdicts and the versioned JSON report.
//!
//! The JSON report is fully deterministic for a fixed config and seed —
//! wall-clock runtimes would break the byte-identity contract across
//! worker counts, so they are collected separately and never serialized
//! into the report.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// Quantity reported for inspection without a pass threshold.
    ReportOnly,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Fail => write!(f, "FAIL"),
            Verdict::ReportOnly => write!(f, "REPORT-ONLY"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub estimate: f64,
    /// 95% interval where one is meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    pub detail: String,
}

impl Check {
    pub fn pass_if(name: &str, ok: bool, estimate: f64, detail: String) -> Self {
        Check {
            name: name.to_string(),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            estimate,
            interval: None,
            detail,
        }
    }

    pub fn report(name: &str, estimate: f64, detail: String) -> Self {
        Check {
            name: name.to_string(),
            verdict: Verdict::ReportOnly,
            estimate,
            interval: None,
            detail,
        }
    }

    pub fn with_interval(mut self, lo: f64, hi: f64) -> Self {
        self.interval = Some((lo, hi));
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub report_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    pub n: Vec<usize>,
    /// Toolchain/platform fingerprint (stable across worker counts).
    pub environment: String,
    pub checks: Vec<Check>,
}

impl RunSummary {
    pub fn new(experiment: &str, seed: u64, trials: usize, n: Vec<usize>) -> Self {
        RunSummary {
            report_version: REPORT_VERSION,
            experiment: experiment.to_string(),
            seed,
            trials,
            n,
            environment: format!(
                "{} {} / {} v{}",
                std::env::consts::OS,
                std::env::consts::ARCH,
                env!("CARGO_PKG_NAME"),
                env!("CARGO_PKG_VERSION"),
            ),
            checks: Vec::new(),
        }
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Fail)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .with_context(|| format!("writing report {}", path.display()))
    }

    /// One human line per check, for the console.
    pub fn print(&self) {
        for c in &self.checks {
            let interval = match c.interval {
                Some((lo, hi)) => format!(" [{lo:.6}, {hi:.6}]"),
                None => String::new(),
            };
            println!(
                "{:12} {:40} {} estimate={:.6}{} {}",
                self.experiment, c.name, c.verdict, c.estimate, interval, c.detail
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_roll_up_and_json_shape() {
        let mut s = RunSummary::new("schur", 1, 10, vec![50]);
        s.checks.push(Check::pass_if("residual", true, 1e-9, String::new()));
        assert!(!s.failed());
        s.checks.push(Check::pass_if("residual-max", false, 1.0, String::new()));
        assert!(s.failed());
        let json = s.to_json();
        assert!(json.contains("\"report_version\": 1"));
        assert!(json.contains("\"Fail\""));
        let back: RunSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(back.checks.len(), 2);
    }
}
