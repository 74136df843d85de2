//! In-memory report assembly and single-writer emission.

use crate::error::{CliError, CliResult};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Named output files, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    files: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn files(&self) -> impl Iterator<Item = (&str, &[u8])> {
        self.files.iter().map(|(n, b)| (n.as_str(), b.as_slice()))
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    pub fn add_bytes(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        let name = name.into();
        self.files.retain(|(n, _)| *n != name);
        self.files.push((name, bytes));
    }

    pub fn add_json(&mut self, name: &str, value: &serde_json::Value) {
        let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
        text.push('\n');
        self.add_bytes(name, text.into_bytes());
    }

    /// Comma-separated table with a header line.
    pub fn add_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) {
        self.add_bytes(name, table(header, rows, ",", "").into_bytes());
    }

    /// Whitespace-separated table with a `#` header, for gnuplot.
    pub fn add_dat(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) {
        self.add_bytes(name, table(header, rows, " ", "# ").into_bytes());
    }

    /// Merges another report, prefixing its file names.
    pub fn merge(&mut self, prefix: &str, other: Report) {
        for (n, b) in other.files {
            self.add_bytes(format!("{prefix}{n}"), b);
        }
    }
}

fn table(header: &[&str], rows: &[Vec<String>], sep: &str, lead: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{lead}{}", header.join(sep));
    for row in rows {
        let _ = writeln!(out, "{}", row.join(sep));
    }
    out
}

/// Formats a float for tables; non-finite values become `inf`, `-inf` or `nan`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
    }
}

/// Writes every file of `report` under `dir`, creating it if needed.
pub fn emit_report(report: &Report, dir: &Path) -> CliResult<Vec<PathBuf>> {
    if report.files.is_empty() {
        return Err(CliError::Config("nothing to write".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(report.files.len());
    for (name, bytes) in &report.files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        written.push(path);
    }
    Ok(written)
}
