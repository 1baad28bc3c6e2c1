use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::stats::Interval;

/// Version of every JSON record written by the crate and the CLI.
pub const SCHEMA_VERSION: u32 = 1;

/// Output record of one estimator run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub name: String,
    pub alpha: f64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub parameters: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl EstimatorReport {
    pub fn new(name: &str, alpha: f64, point: f64, ci: Interval, n_samples: usize, seed: u64) -> Self {
        EstimatorReport {
            name: name.to_string(),
            alpha,
            point,
            ci_low: ci.low.min(point),
            ci_high: ci.high.max(point),
            std_error: ci.std_error,
            n_samples,
            seed,
            parameters: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn interval(&self) -> Interval {
        Interval { low: self.ci_low, high: self.ci_high, std_error: self.std_error }
    }

    pub fn overlaps(&self, other: &EstimatorReport) -> bool {
        self.interval().overlaps(&other.interval())
    }
}

/// One row of a parameter scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    /// The scanned parameter (a level `n` or an α).
    pub x: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub name: String,
    /// Column name of `x` in CSV output, `n` or `alpha`.
    pub key: String,
    pub rows: Vec<ScanRow>,
    pub parameters: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl ScanReport {
    pub fn new(name: &str, key: &str) -> Self {
        ScanReport {
            name: name.to_string(),
            key: key.to_string(),
            rows: Vec::new(),
            parameters: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    /// CSV with columns `key, estimate, stderr, replicas, seed`, then any
    /// extra columns present on the first row.
    pub fn to_csv(&self) -> String {
        let extra: Vec<&String> = self.rows.first().map(|r| r.extra.keys().collect()).unwrap_or_default();
        let mut out = format!("{},estimate,stderr,replicas,seed", self.key);
        for k in &extra {
            out.push(',');
            out.push_str(k);
        }
        out.push('\n');
        for r in &self.rows {
            let x = if self.key == "n" { format!("{}", r.x as u64) } else { format!("{}", r.x) };
            let _ = write!(out, "{x},{},{},{},{}", r.estimate, r.stderr, r.replicas, r.seed);
            for k in &extra {
                let _ = write!(out, ",{}", r.extra.get(*k).copied().unwrap_or(f64::NAN));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_interval_always_contains_point() {
        let r = EstimatorReport::new("x", 2.0, 1.0, Interval { low: 1.2, high: 1.5, std_error: 0.1 }, 10, 3);
        assert!(r.ci_low <= r.point && r.point <= r.ci_high);
        let r = r.with_param("pool_size", 10);
        assert_eq!(r.parameters["pool_size"], Value::from(10));
    }

    #[test]
    fn scan_csv_layout() {
        let mut s = ScanReport::new("scan", "n");
        s.rows.push(ScanRow { x: 16.0, estimate: 0.5, stderr: 0.01, replicas: 100, seed: 7, extra: BTreeMap::new() });
        assert_eq!(s.to_csv(), "n,estimate,stderr,replicas,seed\n16,0.5,0.01,100,7\n");
    }
}
