//! Tables from a finished run.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::metrics::{read_metrics_csv, write_metrics_csv, MetricsRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Parse(format!("unknown report format '{other}'"))),
        }
    }
}

/// Read `metrics.csv` from a run directory (or a metrics file directly).
pub fn load_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let file = if path.is_dir() { path.join("metrics.csv") } else { path.to_path_buf() };
    read_metrics_csv(fs::File::open(&file).map_err(|e| Error::Io(format!("{}: {e}", file.display())))?)
}

pub fn render(rows: &[MetricsRow], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            write_metrics_csv(rows, &mut buf)?;
            String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
        }
        ReportFormat::Markdown => Ok(markdown(rows)),
    }
}

fn cell(v: f64, se: f64, digits: usize) -> String {
    if v.is_nan() {
        "n/a".into()
    } else {
        format!("{v:.digits$} ({se:.digits$})")
    }
}

/// One table per model, a row per method; standard errors in parentheses.
pub fn markdown(rows: &[MetricsRow]) -> String {
    let mut models: Vec<(&str, usize)> = Vec::new();
    for r in rows {
        if !models.contains(&(r.model.as_str(), r.n)) {
            models.push((r.model.as_str(), r.n));
        }
    }
    let mut s = String::new();
    for (model, n) in models {
        let _ = writeln!(s, "### {model}, n = {n}\n");
        s.push_str("| method | replicates | excluded | CP | size | abs bias | risk |\n");
        s.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
        for r in rows.iter().filter(|r| r.model == model && r.n == n) {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r.method.as_str().to_ascii_uppercase(),
                r.replicates,
                r.excluded,
                cell(r.cp, r.cp_se, 2),
                cell(r.size, r.size_se, 2),
                cell(r.abs_bias, r.bias_se, 2),
                cell(r.risk, r.risk_se, 2),
            );
        }
        s.push('\n');
    }
    s
}
