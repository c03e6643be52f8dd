use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use epicast_core::arima::ArimaOrders;
use epicast_core::neural::Architecture;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// A neural architecture or the ARIMA baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelKind {
    Neural(Architecture),
    Arima,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Neural(a) => a.name(),
            ModelKind::Arima => "arima",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "arima" {
            return Ok(ModelKind::Arima);
        }
        s.parse::<Architecture>()
            .map(ModelKind::Neural)
            .map_err(|_| CliError::InvalidConfig(format!("unknown model {s:?}")))
    }
}

impl TryFrom<String> for ModelKind {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelKind> for String {
    fn from(m: ModelKind) -> String {
        m.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(CliError::InvalidConfig(format!(
                "unknown report format {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub countries: Vec<String>,
    pub cutoff_date: NaiveDate,
    pub threshold: f64,
    pub models: Vec<ModelKind>,
    pub seq_lengths: Vec<usize>,
    pub horizons: Vec<usize>,
    pub n_inits: usize,
    pub base_seed: u64,
    /// Training epochs for every neural model.
    pub epochs: usize,
    pub arima_orders: ArimaOrders,
    /// Window lengths used for ARIMA, in place of `seq_lengths`.
    pub arima_seq_lengths: Vec<usize>,
    /// Pick ARIMA orders from {1,2,3}^3 by validation MAPE instead of
    /// using `arima_orders`.
    pub arima_grid_search: bool,
    pub output_dir: PathBuf,
    pub report_format: ReportFormat,
    pub emit_plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_path: PathBuf::from("data/time_series_covid19_confirmed_global.csv"),
            countries: ["US", "Italy", "Spain", "Germany"]
                .map(String::from)
                .to_vec(),
            cutoff_date: NaiveDate::from_ymd_opt(2020, 5, 25).expect("valid date"),
            threshold: 100.0,
            models: vec![
                ModelKind::Neural(Architecture::Vanilla),
                ModelKind::Neural(Architecture::Stacked),
                ModelKind::Neural(Architecture::Bidirectional),
                ModelKind::Neural(Architecture::CnnLstm),
                ModelKind::Neural(Architecture::ConvLstm),
                ModelKind::Arima,
            ],
            seq_lengths: vec![3, 6, 10, 15],
            horizons: vec![1, 3, 5],
            n_inits: 100,
            base_seed: 0,
            epochs: 200,
            arima_orders: ArimaOrders::default(),
            arima_seq_lengths: vec![15],
            arima_grid_search: false,
            output_dir: PathBuf::from("results"),
            report_format: ReportFormat::Csv,
            emit_plots: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(CliError::InvalidConfig(m.to_string()));
        if self.horizons.is_empty() {
            return fail("horizons must not be empty");
        }
        if self.horizons.contains(&0)
            || self.seq_lengths.contains(&0)
            || self.arima_seq_lengths.contains(&0)
        {
            return fail("window lengths and horizons must be positive");
        }
        if self.n_inits == 0 {
            return fail("n_inits must be at least 1");
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return fail("threshold must be a non-negative number");
        }
        ArimaOrders::new(
            self.arima_orders.p,
            self.arima_orders.d,
            self.arima_orders.q,
        )?;
        Ok(())
    }

    /// Window lengths that apply to `model`.
    pub fn seq_lengths_for(&self, model: ModelKind) -> &[usize] {
        match model {
            ModelKind::Arima => &self.arima_seq_lengths,
            ModelKind::Neural(_) => &self.seq_lengths,
        }
    }
}
