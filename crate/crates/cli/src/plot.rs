//! Forecast-versus-truth line charts as standalone SVG.

use std::fmt::Write as _;
use std::path::Path;

use epicast_core::forecast::ForecastResult;
use epicast_core::series::TimeSeries;

use crate::error::{CliError, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const CONTEXT: usize = 15;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// SVG text for the truth tail around the forecasts plus one polyline per
/// model. Forecast values are also stored in `data-values` attributes.
pub fn render_plot(
    series: &TimeSeries,
    results: &[(String, ForecastResult)],
    title: &str,
) -> Result<String> {
    if results.is_empty() {
        return Err(CliError::NoForecasts);
    }
    let values = series.values();
    let first = results
        .iter()
        .map(|(_, r)| r.source_window_end)
        .min()
        .unwrap_or(0);
    let last = results
        .iter()
        .map(|(_, r)| r.source_window_end + r.horizon())
        .max()
        .unwrap_or(0)
        .min(values.len().saturating_sub(1));
    let lo = first.saturating_sub(CONTEXT);
    let truth = &values[lo..=last];

    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for v in truth
        .iter()
        .chain(results.iter().flat_map(|(_, r)| r.predictions.iter()))
    {
        y_min = y_min.min(*v);
        y_max = y_max.max(*v);
    }
    if y_max - y_min < 1e-9 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let x_hi = results
        .iter()
        .map(|(_, r)| r.source_window_end + r.horizon())
        .max()
        .unwrap_or(last)
        .max(lo + 1);
    let sx = |i: usize| MARGIN + (i - lo) as f64 / (x_hi - lo) as f64 * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);
    let points = |pts: &mut dyn Iterator<Item = (usize, f64)>| {
        pts.map(|(i, v)| format!("{:.2},{:.2}", sx(i), sy(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path class="axes" d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" stroke="black" fill="none"/>"#
    );
    let axis_label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{text}</text>"#
        );
    };
    axis_label(
        &mut svg,
        x0,
        y1 + 18.0,
        "start",
        series.date_at(lo).to_string(),
    );
    axis_label(
        &mut svg,
        x1,
        y1 + 18.0,
        "end",
        series.date_at(x_hi.min(values.len() - 1)).to_string(),
    );
    axis_label(&mut svg, x0 - 6.0, y1, "end", format!("{y_min:.0}"));
    axis_label(&mut svg, x0 - 6.0, y0 + 4.0, "end", format!("{y_max:.0}"));

    let truth_pts = points(&mut truth.iter().enumerate().map(|(k, v)| (lo + k, *v)));
    let _ = writeln!(
        svg,
        r#"<polyline class="truth" data-start="{lo}" data-values="{}" points="{truth_pts}" stroke="black" stroke-width="2" fill="none"/>"#,
        join(truth)
    );
    for (k, (label, r)) in results.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let start = r.source_window_end + 1;
        let pts = points(
            &mut r
                .predictions
                .iter()
                .enumerate()
                .map(|(j, v)| (start + j, *v)),
        );
        let _ = writeln!(
            svg,
            r#"<polyline class="forecast" data-model="{}" data-start="{start}" data-values="{}" points="{pts}" stroke="{colour}" stroke-width="2" stroke-dasharray="6 3" fill="none"/>"#,
            escape(label),
            join(&r.predictions)
        );
    }

    let legend: Vec<(&str, &str)> = std::iter::once(("truth", "black"))
        .chain(
            results
                .iter()
                .enumerate()
                .map(|(k, (l, _))| (l.as_str(), PALETTE[k % PALETTE.len()])),
        )
        .collect();
    let _ = writeln!(
        svg,
        r#"<g class="legend" font-family="sans-serif" font-size="12">"#
    );
    for (k, (label, colour)) in legend.iter().enumerate() {
        let y = MARGIN + 10.0 + 18.0 * k as f64;
        let x = MARGIN + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x + 20.0,
            x + 26.0,
            y + 4.0,
            escape(label)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(
    series: &TimeSeries,
    results: &[(String, ForecastResult)],
    path: &Path,
) -> Result<()> {
    let title = series.region_id().to_string();
    let svg = render_plot(series, results, &title)?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, svg).map_err(|e| CliError::io(path, e))
}
