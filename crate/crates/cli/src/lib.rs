//! Data ingestion, experiment grid, reports and plots for the `epicast`
//! command-line tool.

pub mod benchmark;
pub mod config;
pub mod error;
pub mod jhu;
pub mod plot;
pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub use benchmark::{grid, run_benchmark, run_benchmark_with, BenchmarkRun, CellSpec};
pub use config::{ExperimentConfig, ModelKind, ReportFormat};
pub use error::{CliError, Result};
pub use jhu::{parse_jhu_csv, JhuTable};
pub use plot::{emit_plot, render_plot};
pub use report::{emit_report, MetricReport, MetricRow};

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// One SVG per (country, n_s, n_p) holding every model that ran there.
pub fn write_plots(run: &BenchmarkRun, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut groups: BTreeMap<(String, usize, usize), Vec<(String, _)>> = BTreeMap::new();
    for (cell, result) in &run.last_forecasts {
        groups
            .entry((cell.country.clone(), cell.n_s, cell.n_p))
            .or_default()
            .push((cell.model.to_string(), result.clone()));
    }
    let mut written = Vec::new();
    for ((country, n_s, n_p), results) in groups {
        let Some(series) = run.series.get(&country) else {
            continue;
        };
        let path = dir.join(format!(
            "forecast_{}_ns{n_s}_np{n_p}.svg",
            file_safe(&country)
        ));
        emit_plot(series, &results, &path)?;
        written.push(path);
    }
    Ok(written)
}
