use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use epicast_core::arima::ArimaOrders;
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, ReportFormat};
use crate::error::{CliError, Result};

pub const CSV_HEADER: &str = "model,country,n_s,n_p,kmape_percent,kmdsa_percent";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: ModelKind,
    pub country: String,
    pub n_s: usize,
    pub n_p: usize,
    pub kmape_percent: f64,
    pub kmdsa_percent: f64,
}

/// Grid cell that did not produce a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub model: ModelKind,
    pub country: String,
    pub n_s: usize,
    pub n_p: usize,
    pub error: String,
}

/// What a cell settled on: the winning seed or the ARIMA orders used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSelection {
    pub model: ModelKind,
    pub country: String,
    pub n_s: usize,
    pub n_p: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub orders: Option<ArimaOrders>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub toolkit_version: String,
    pub cutoff_date: NaiveDate,
    pub threshold: f64,
    pub base_seed: u64,
    pub n_inits: usize,
    pub epochs: usize,
    pub selections: Vec<CellSelection>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<MetricRow>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl MetricReport {
    /// Header plus one line per row. Numbers use the shortest text that
    /// parses back to the same f64.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:?},{:?}\n",
                r.model,
                csv_field(&r.country),
                r.n_s,
                r.n_p,
                r.kmape_percent,
                r.kmdsa_percent
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Csv => Ok(self.to_csv()),
            ReportFormat::Json => self.to_json(),
        }
    }
}

pub fn report_file_name(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Csv => "report.csv",
        ReportFormat::Json => "report.json",
    }
}

/// Writes the report into `dir` and returns the file path.
pub fn emit_report(report: &MetricReport, format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(report_file_name(format));
    std::fs::write(&path, report.render(format)?).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
