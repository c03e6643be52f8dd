use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use epicast_cli::{
    grid, render_plot, run_benchmark, run_benchmark_with, write_plots, ExperimentConfig, ModelKind,
};
use epicast_core::forecast::ForecastResult;
use epicast_core::neural::Architecture;
use epicast_core::series::TimeSeries;
use epicast_core::Execution;

mod common;

fn config(data: &Path, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        data_path: data.to_path_buf(),
        countries: vec!["Germany".into(), "Italy".into()],
        models: vec![ModelKind::Arima, ModelKind::Neural(Architecture::Vanilla)],
        seq_lengths: vec![3],
        horizons: vec![1, 3],
        n_inits: 2,
        epochs: 5,
        output_dir: out.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn rows_follow_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::write_synthetic(dir.path(), 125, 1);
    let cfg = config(&data, dir.path());
    let report = run_benchmark(&cfg).unwrap();
    assert!(
        report.metadata.failures.is_empty(),
        "{:?}",
        report.metadata.failures
    );
    let keys: Vec<_> = report
        .rows
        .iter()
        .map(|r| (r.model, r.country.clone(), r.n_s, r.n_p))
        .collect();
    let expected: Vec<_> = grid(&cfg)
        .into_iter()
        .map(|c| (c.model, c.country, c.n_s, c.n_p))
        .collect();
    assert_eq!(keys, expected);
    // ARIMA uses its own window length.
    assert!(report
        .rows
        .iter()
        .filter(|r| r.model == ModelKind::Arima)
        .all(|r| r.n_s == 15));
    for r in &report.rows {
        assert!(r.kmape_percent.is_finite() && r.kmape_percent >= 0.0);
        assert!(r.kmdsa_percent.is_finite() && r.kmdsa_percent >= 0.0);
    }
    let seeds: Vec<_> = report
        .metadata
        .selections
        .iter()
        .map(|s| (s.seed, s.orders))
        .collect();
    assert!(seeds
        .iter()
        .all(|(seed, orders)| seed.is_some() != orders.is_some()));
}

#[test]
fn failures_are_recorded_and_rest_proceed() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::write_synthetic(dir.path(), 125, 2);
    let mut cfg = config(&data, dir.path());
    cfg.countries = vec!["Atlantis".into(), "Germany".into()];
    cfg.models = vec![ModelKind::Arima];
    cfg.arima_seq_lengths = vec![15, 200];
    let report = run_benchmark(&cfg).unwrap();
    let ran: BTreeSet<_> = report
        .rows
        .iter()
        .map(|r| (r.country.clone(), r.n_s, r.n_p))
        .collect();
    let failed: BTreeSet<_> = report
        .metadata
        .failures
        .iter()
        .map(|f| (f.country.clone(), f.n_s, f.n_p))
        .collect();
    assert!(ran.is_disjoint(&failed));
    let all: BTreeSet<_> = grid(&cfg)
        .into_iter()
        .map(|c| (c.country, c.n_s, c.n_p))
        .collect();
    assert_eq!(ran.union(&failed).cloned().collect::<BTreeSet<_>>(), all);
    assert_eq!(ran.len(), 2);
    assert!(report
        .metadata
        .failures
        .iter()
        .any(|f| f.error.contains("Atlantis")));
}

#[test]
fn empty_model_list_gives_metadata_only() {
    let cfg = ExperimentConfig {
        models: vec![],
        data_path: "does/not/exist.csv".into(),
        ..Default::default()
    };
    let report = run_benchmark(&cfg).unwrap();
    assert!(report.rows.is_empty());
    assert!(report.metadata.failures.is_empty());
    assert_eq!(report.to_csv().lines().count(), 1);
}

#[test]
fn schedules_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::write_synthetic(dir.path(), 110, 3);
    let cfg = config(&data, dir.path());
    let seq = run_benchmark_with(&cfg, Execution::Sequential)
        .unwrap()
        .report;
    let par = run_benchmark_with(&cfg, Execution::Parallel)
        .unwrap()
        .report;
    assert_eq!(seq.to_csv(), par.to_csv());
    assert_eq!(seq.to_json().unwrap(), par.to_json().unwrap());
}

#[test]
fn grid_search_records_orders() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::write_synthetic(dir.path(), 110, 4);
    let mut cfg = config(&data, dir.path());
    cfg.models = vec![ModelKind::Arima];
    cfg.countries = vec!["Spain".into()];
    cfg.horizons = vec![1];
    cfg.arima_grid_search = true;
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.rows.len(), 1, "{:?}", report.metadata.failures);
    let orders = report.metadata.selections[0].orders.unwrap();
    assert!(
        (1..=3).contains(&orders.p) && (1..=3).contains(&orders.d) && (1..=3).contains(&orders.q)
    );
}

fn attr<'a>(tag: &'a str, name: &str) -> &'a str {
    let key = format!("{name}=\"");
    let start = tag.find(&key).unwrap() + key.len();
    let len = tag[start..].find('"').unwrap();
    &tag[start..start + len]
}

fn numbers(s: &str) -> Vec<f64> {
    s.split(',').map(|v| v.parse().unwrap()).collect()
}

#[test]
fn plot_embeds_forecast_values() {
    let series = TimeSeries::new(
        "Germany",
        chrono::NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(),
        (0..40).map(|i| 100.0 + 10.0 * i as f64).collect(),
    )
    .unwrap();
    let result = ForecastResult {
        predictions: vec![481.25, 492.5, 503.75],
        source_window_end: 36,
    };
    let svg = render_plot(&series, &[("vanilla".into(), result.clone())], "Germany").unwrap();
    assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    let forecasts: Vec<&str> = svg
        .lines()
        .filter(|l| l.contains("class=\"forecast\""))
        .collect();
    let truths: Vec<&str> = svg
        .lines()
        .filter(|l| l.contains("class=\"truth\""))
        .collect();
    assert_eq!((forecasts.len(), truths.len()), (1, 1));
    assert_eq!(
        numbers(attr(forecasts[0], "data-values")),
        result.predictions
    );
    assert_eq!(attr(forecasts[0], "data-model"), "vanilla");
    assert_eq!(attr(forecasts[0], "points").split(' ').count(), 3);
    let start: usize = attr(truths[0], "data-start").parse().unwrap();
    assert_eq!(
        numbers(attr(truths[0], "data-values")),
        series.values()[start..].to_vec()
    );
    assert!(svg.contains("class=\"legend\""));

    assert!(render_plot(&series, &[], "Germany").is_err());
}

#[test]
fn benchmark_plots_match_last_test_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::write_synthetic(dir.path(), 120, 6);
    let mut cfg = config(&data, dir.path());
    cfg.models = vec![ModelKind::Arima];
    cfg.countries = vec!["US".into()];
    cfg.horizons = vec![3];
    let run = run_benchmark_with(&cfg, Execution::default()).unwrap();
    let paths = write_plots(&run, &dir.path().join("plots")).unwrap();
    assert_eq!(paths.len(), 1);
    assert!(paths[0].ends_with("forecast_US_ns15_np3.svg"));
    let svg = std::fs::read_to_string(&paths[0]).unwrap();
    let line = svg
        .lines()
        .find(|l| l.contains("class=\"forecast\""))
        .unwrap();
    let (_, last) = &run.last_forecasts[0];
    assert_eq!(numbers(attr(line, "data-values")), last.predictions);
    // The final test window ends three days before the cutoff.
    assert_eq!(last.source_window_end + 3, run.series["US"].len() - 1);
}

#[test]
fn binary_writes_report_and_signals_failures() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::write_synthetic(dir.path(), 110, 7);
    let cfg = ExperimentConfig {
        models: vec![ModelKind::Arima],
        countries: vec!["Italy".into()],
        horizons: vec![1],
        ..Default::default()
    };
    let cfg_path = dir.path().join("experiment.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("out");
    let run_on = |data: &Path, extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_epicast"))
            .arg("benchmark")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--data")
            .arg(data)
            .arg("--out")
            .arg(&out)
            .args(extra)
            .output()
            .unwrap()
    };
    let run = |extra: &[&str]| run_on(&data, extra);
    let ok = run(&[
        "--format",
        "json",
        "--horizon",
        "1",
        "--horizon",
        "5",
        "--plots",
    ]);
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let report = epicast_cli::MetricReport::from_json(&text).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(out.join("plots/forecast_Italy_ns15_np5.svg").exists());

    let bad = run(&["--country", "Atlantis", "--format", "csv"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(
        std::fs::read_to_string(out.join("report.csv")).unwrap(),
        "model,country,n_s,n_p,kmape_percent,kmdsa_percent\n"
    );

    let missing = run_on(&dir.path().join("nope.csv"), &[]);
    assert_eq!(missing.status.code(), Some(2));
}
