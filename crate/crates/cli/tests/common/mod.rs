#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Logistic-looking cumulative counts for a few countries, with Italy split
/// over two provinces. Days run from 1/22/20 for `days` days.
pub fn synthetic_csv(days: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2020, 1, 22).unwrap();
    let mut out = String::from("Province/State,Country/Region,Lat,Long");
    for d in 0..days {
        let date = start + Duration::days(d as i64);
        let _ = write!(out, ",{}", date.format("%-m/%-d/%y"));
    }
    out.push('\n');
    let rows: [(&str, &str, f64, f64, f64); 5] = [
        ("", "US", 1.6e6, 0.11, 75.0),
        ("Lombardy", "Italy", 9.0e4, 0.14, 50.0),
        ("Veneto", "Italy", 1.9e4, 0.13, 55.0),
        ("", "Spain", 2.3e5, 0.15, 60.0),
        ("", "Germany", 1.8e5, 0.16, 58.0),
    ];
    for (province, country, cap, rate, mid) in rows {
        let _ = write!(out, "{province},{country},0.0,0.0");
        let mut total = 0.0f64;
        for d in 0..days {
            let sig = 1.0 / (1.0 + (-rate * (d as f64 - mid)).exp());
            // Logistic growth plus a slow linear tail, with noisy reporting.
            let daily = cap * (rate * sig * (1.0 - sig) + 0.002 * sig);
            total += (daily * (1.0 + rng.random_range(-0.2..0.2))).round();
            let _ = write!(out, ",{total}");
        }
        out.push('\n');
    }
    out
}

pub fn write_synthetic(dir: &Path, days: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join("confirmed.csv");
    std::fs::write(&path, synthetic_csv(days, seed)).unwrap();
    path
}
