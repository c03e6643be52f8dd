//! Runs the model x country x n_s x n_p grid.

use std::collections::BTreeMap;

use epicast_core::arima::{grid_search_orders, window_score, ArimaForecaster, ArimaOrders};
use epicast_core::forecast::{evaluate, Evaluation, ForecastResult};
use epicast_core::neural::{multi_init_train, NetworkConfig};
use epicast_core::series::{split_train_val_test, TimeSeries};
use epicast_core::Execution;
use log::{info, warn};

use crate::config::{ExperimentConfig, ModelKind};
use crate::error::Result;
use crate::jhu::JhuTable;
use crate::report::{CellFailure, CellSelection, MetricReport, MetricRow, ReportMetadata};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSpec {
    pub model: ModelKind,
    pub country: String,
    pub n_s: usize,
    pub n_p: usize,
}

/// Cells in report order: model, then country, then n_s, then n_p, each in
/// the order given by the config.
pub fn grid(config: &ExperimentConfig) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for &model in &config.models {
        for country in &config.countries {
            for &n_s in config.seq_lengths_for(model) {
                for &n_p in &config.horizons {
                    cells.push(CellSpec {
                        model,
                        country: country.clone(),
                        n_s,
                        n_p,
                    });
                }
            }
        }
    }
    cells
}

struct CellOutput {
    evaluation: Evaluation,
    seed: Option<u64>,
    orders: Option<ArimaOrders>,
}

fn run_cell(
    config: &ExperimentConfig,
    series: &TimeSeries,
    cell: &CellSpec,
    exec: Execution,
) -> epicast_core::Result<CellOutput> {
    let split = split_train_val_test(series.make_windows(cell.n_s, cell.n_p)?)?;
    match cell.model {
        ModelKind::Arima => {
            let orders = if config.arima_grid_search {
                grid_search_orders(exec, |o| window_score(&split.validation, o))?.0
            } else {
                config.arima_orders
            };
            let model = ArimaForecaster::new(orders, cell.n_s);
            Ok(CellOutput {
                evaluation: evaluate(&model, &split.test, cell.n_p, exec)?,
                seed: None,
                orders: Some(orders),
            })
        }
        ModelKind::Neural(arch) => {
            let net = NetworkConfig {
                epochs: config.epochs,
                seed: config.base_seed,
                ..NetworkConfig::defaults(arch, cell.n_s)
            };
            let trained = multi_init_train(&net, &split, config.n_inits, cell.n_p, exec)?;
            Ok(CellOutput {
                evaluation: evaluate(&trained.model, &split.test, cell.n_p, exec)?,
                seed: Some(trained.seed()),
                orders: None,
            })
        }
    }
}

/// A finished benchmark with what the plots need.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub report: MetricReport,
    /// Truncated series per country that loaded.
    pub series: BTreeMap<String, TimeSeries>,
    /// Forecast for the last test window of every successful cell.
    pub last_forecasts: Vec<(CellSpec, ForecastResult)>,
}

pub fn run_benchmark(config: &ExperimentConfig) -> Result<MetricReport> {
    Ok(run_benchmark_with(config, Execution::default())?.report)
}

pub fn run_benchmark_with(config: &ExperimentConfig, exec: Execution) -> Result<BenchmarkRun> {
    config.validate()?;
    let cells = grid(config);
    let mut series = BTreeMap::new();
    let mut country_errors = BTreeMap::new();
    if !cells.is_empty() {
        let table = JhuTable::read(&config.data_path, config.cutoff_date)?;
        for country in &config.countries {
            let loaded = table
                .series(country)
                .and_then(|s| Ok(s.truncate_below_threshold(config.threshold)?));
            match loaded {
                Ok(s) => {
                    info!("{country}: {} days from {}", s.len(), s.start_date());
                    series.insert(country.clone(), s);
                }
                Err(e) => {
                    warn!("{country}: {e}");
                    country_errors.insert(country.clone(), e.to_string());
                }
            }
        }
    }

    let outcomes = exec.map_slice(&cells, |cell| match series.get(&cell.country) {
        Some(s) => run_cell(config, s, cell, exec).map_err(|e| e.to_string()),
        None => Err(country_errors[&cell.country].clone()),
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut selections = Vec::new();
    let mut last_forecasts = Vec::new();
    for (cell, outcome) in cells.into_iter().zip(outcomes) {
        match outcome {
            Ok(out) => {
                info!(
                    "{} {} n_s={} n_p={}: kMAPE {} kMdSA {}",
                    cell.model,
                    cell.country,
                    cell.n_s,
                    cell.n_p,
                    out.evaluation.kmape,
                    out.evaluation.kmdsa
                );
                rows.push(MetricRow {
                    model: cell.model,
                    country: cell.country.clone(),
                    n_s: cell.n_s,
                    n_p: cell.n_p,
                    kmape_percent: out.evaluation.kmape.percent(),
                    kmdsa_percent: out.evaluation.kmdsa.percent(),
                });
                selections.push(CellSelection {
                    model: cell.model,
                    country: cell.country.clone(),
                    n_s: cell.n_s,
                    n_p: cell.n_p,
                    seed: out.seed,
                    orders: out.orders,
                });
                if let Some(last) = out.evaluation.results.last() {
                    last_forecasts.push((cell, last.clone()));
                }
            }
            Err(error) => {
                warn!(
                    "{} {} n_s={} n_p={} failed: {error}",
                    cell.model, cell.country, cell.n_s, cell.n_p
                );
                failures.push(CellFailure {
                    model: cell.model,
                    country: cell.country,
                    n_s: cell.n_s,
                    n_p: cell.n_p,
                    error,
                });
            }
        }
    }

    let report = MetricReport {
        metadata: ReportMetadata {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            cutoff_date: config.cutoff_date,
            threshold: config.threshold,
            base_seed: config.base_seed,
            n_inits: config.n_inits,
            epochs: config.epochs,
            selections,
            failures,
        },
        rows,
    };
    Ok(BenchmarkRun {
        report,
        series,
        last_forecasts,
    })
}
