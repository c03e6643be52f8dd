use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use epicast_cli::{
    emit_report, run_benchmark_with, write_plots, ExperimentConfig, ModelKind, ReportFormat,
};
use epicast_core::Execution;

#[derive(Parser)]
#[command(
    name = "epicast",
    version,
    about = "Forecast cumulative case counts and benchmark models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the model x country x n_s x n_p grid and write a report.
    Benchmark(BenchmarkArgs),
}

#[derive(clap::Args)]
struct BenchmarkArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wide-format confirmed-cases CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long = "country")]
    countries: Vec<String>,
    /// vanilla, stacked, bidirectional, cnn_lstm, conv_lstm or arima.
    #[arg(long = "model")]
    models: Vec<ModelKind>,
    #[arg(long = "seq-len")]
    seq_lengths: Vec<usize>,
    #[arg(long = "horizon")]
    horizons: Vec<usize>,
    #[arg(long)]
    inits: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Last day to read, as YYYY-MM-DD.
    #[arg(long)]
    cutoff: Option<NaiveDate>,
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG forecast plots.
    #[arg(long)]
    plots: bool,
    /// Run grid cells and initialisations one at a time.
    #[arg(long)]
    sequential: bool,
}

fn apply(args: BenchmarkArgs, mut cfg: ExperimentConfig) -> ExperimentConfig {
    if let Some(v) = args.data {
        cfg.data_path = v;
    }
    if !args.countries.is_empty() {
        cfg.countries = args.countries;
    }
    if !args.models.is_empty() {
        cfg.models = args.models;
    }
    if !args.seq_lengths.is_empty() {
        cfg.seq_lengths = args.seq_lengths;
    }
    if !args.horizons.is_empty() {
        cfg.horizons = args.horizons;
    }
    if let Some(v) = args.inits {
        cfg.n_inits = v;
    }
    if let Some(v) = args.seed {
        cfg.base_seed = v;
    }
    if let Some(v) = args.cutoff {
        cfg.cutoff_date = v;
    }
    if let Some(v) = args.format {
        cfg.report_format = v;
    }
    if let Some(v) = args.out {
        cfg.output_dir = v;
    }
    cfg.emit_plots |= args.plots;
    cfg
}

fn benchmark(args: BenchmarkArgs) -> anyhow::Result<bool> {
    let base = match &args.config {
        Some(path) => {
            ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let cfg = apply(args, base);
    let run = run_benchmark_with(&cfg, exec)?;
    let path = emit_report(&run.report, cfg.report_format, &cfg.output_dir)?;
    println!("wrote {}", path.display());
    if cfg.emit_plots {
        for p in write_plots(&run, &cfg.output_dir.join("plots"))? {
            println!("wrote {}", p.display());
        }
    }
    for f in &run.report.metadata.failures {
        eprintln!(
            "failed: {} {} n_s={} n_p={}: {}",
            f.model, f.country, f.n_s, f.n_p, f.error
        );
    }
    Ok(run.report.metadata.failures.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Benchmark(args) => benchmark(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
