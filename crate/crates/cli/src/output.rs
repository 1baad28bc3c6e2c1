//! Rendering of command results as JSON, CSV or aligned text.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};
use stablegw::analysis::{EstimatorReport, ScanReport, SCHEMA_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

/// Everything a command produced. `result` carries the full structured
/// output; reports and scans drive the CSV and table views.
#[derive(Debug, Default)]
pub struct Output {
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub result: Value,
    pub reports: Vec<EstimatorReport>,
    pub scans: Vec<ScanReport>,
    pub warnings: Vec<String>,
    /// Verbatim text that replaces the rendered output (tree dumps).
    pub raw: Option<String>,
}

impl Output {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Output { command: command.into(), seed, config, ..Default::default() }
    }

    /// Collect the warnings carried by reports and scans.
    pub fn gather_warnings(&mut self) {
        for r in &self.reports {
            self.warnings.extend(r.warnings.iter().map(|w| format!("{}: {w}", r.name)));
        }
        for s in &self.scans {
            self.warnings.extend(s.warnings.iter().map(|w| format!("{}: {w}", s.name)));
        }
    }

    pub fn envelope(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "result": self.result,
            "warnings": self.warnings,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(&self.envelope()).unwrap() + "\n",
            Format::Csv => self.csv(),
            Format::Table => self.table(),
        }
    }

    fn csv(&self) -> String {
        if !self.scans.is_empty() {
            return self.scans.iter().map(ScanReport::to_csv).collect::<Vec<_>>().join("\n");
        }
        if !self.reports.is_empty() {
            let mut out = String::from("name,alpha,point,ci_low,ci_high,std_error,n_samples,seed\n");
            for r in &self.reports {
                let _ = writeln!(out, "{},{},{},{},{},{},{},{}", r.name, r.alpha, r.point, r.ci_low, r.ci_high, r.std_error, r.n_samples, r.seed);
            }
            return out;
        }
        let mut out = String::from("key,value\n");
        for (k, v) in flatten(&self.result) {
            let v = if v.contains(',') || v.contains('"') { format!("\"{}\"", v.replace('"', "\"\"")) } else { v };
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }

    fn table(&self) -> String {
        let mut out = format!("{} (seed {})\n", self.command, self.seed);
        if !self.reports.is_empty() {
            let mut rows = vec![vec!["name", "alpha", "point", "95% interval", "std error", "samples"].into_iter().map(String::from).collect()];
            for r in &self.reports {
                rows.push(vec![
                    r.name.clone(),
                    format!("{}", r.alpha),
                    format!("{:.6}", r.point),
                    format!("[{:.6}, {:.6}]", r.ci_low, r.ci_high),
                    format!("{:.3e}", r.std_error),
                    r.n_samples.to_string(),
                ]);
            }
            out.push_str(&align(&rows));
        }
        for s in &self.scans {
            out.push_str(&format!("\n{}\n", s.name));
            let extra: Vec<String> = s.rows.first().map(|r| r.extra.keys().cloned().collect()).unwrap_or_default();
            let mut header = vec![s.key.clone(), "estimate".into(), "stderr".into(), "replicas".into()];
            header.extend(extra.iter().cloned());
            let mut rows = vec![header];
            for r in &s.rows {
                let mut row = vec![format!("{}", r.x), format!("{:.6}", r.estimate), format!("{:.3e}", r.stderr), r.replicas.to_string()];
                row.extend(extra.iter().map(|k| format!("{:.6}", r.extra.get(k).copied().unwrap_or(f64::NAN))));
                rows.push(row);
            }
            out.push_str(&align(&rows));
        }
        if self.reports.is_empty() && self.scans.is_empty() {
            let rows: Vec<Vec<String>> = flatten(&self.result).into_iter().map(|(k, v)| vec![k, v]).collect();
            out.push_str(&align(&rows));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

/// Dotted-path leaves of a JSON value, in document order.
pub fn flatten(v: &Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, v)| walk(&key(k), v, out)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| walk(&key(&i.to_string()), v, out)),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", v, &mut out);
    out
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
