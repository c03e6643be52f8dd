//! Reader for the wide global confirmed-cases CSV.
//!
//! One row per (province, country), four fixed columns, then one column per
//! day in `M/D/YY` form. Countries with several provinces are summed.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use epicast_core::series::TimeSeries;

use crate::error::{CliError, Result};

const FIXED: [&str; 4] = ["Province/State", "Country/Region", "Lat", "Long"];

/// Per-country totals read from one file, cut at a date.
#[derive(Debug, Clone)]
pub struct JhuTable {
    start: NaiveDate,
    totals: BTreeMap<String, Vec<f64>>,
}

fn parse_day(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%m/%d/%y").ok()
}

impl JhuTable {
    pub fn read(path: &Path, cutoff: NaiveDate) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => CliError::io(path, io),
                other => CliError::MalformedHeader(format!("{other:?}")),
            })?;
        let headers = reader.headers()?.clone();
        for (i, name) in FIXED.iter().enumerate() {
            if headers.get(i) != Some(name) {
                return Err(CliError::MalformedHeader(format!(
                    "column {} should be {name:?}, found {:?}",
                    i + 1,
                    headers.get(i).unwrap_or("")
                )));
            }
        }
        let mut dates: Vec<NaiveDate> = Vec::new();
        for h in headers.iter().skip(FIXED.len()) {
            let day = parse_day(h)
                .ok_or_else(|| CliError::MalformedHeader(format!("{h:?} is not an M/D/YY date")))?;
            if let Some(&prev) = dates.last() {
                if day != prev + Duration::days(1) {
                    return Err(CliError::MissingDay {
                        before: prev.to_string(),
                        after: day.to_string(),
                    });
                }
            }
            dates.push(day);
        }
        let start = *dates
            .first()
            .ok_or_else(|| CliError::MalformedHeader("no date columns".into()))?;
        let keep = dates.iter().take_while(|d| **d <= cutoff).count();
        if keep == 0 {
            return Err(CliError::NothingBeforeCutoff(cutoff.to_string()));
        }

        let mut totals: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let country = record.get(1).unwrap_or("").to_string();
            let sums = totals.entry(country).or_insert_with(|| vec![0.0; keep]);
            for (k, sum) in sums.iter_mut().enumerate() {
                let column = FIXED.len() + k;
                let cell = record.get(column).unwrap_or("");
                let value: f64 = cell.trim().parse().map_err(|_| CliError::NonNumericCell {
                    line,
                    column: column + 1,
                    value: cell.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(CliError::NonNumericCell {
                        line,
                        column: column + 1,
                        value: cell.to_string(),
                    });
                }
                *sum += value;
            }
        }
        Ok(Self { start, totals })
    }

    pub fn countries(&self) -> impl Iterator<Item = &str> {
        self.totals.keys().map(String::as_str)
    }

    /// Raw (untruncated) series for an exact country name.
    pub fn series(&self, country: &str) -> Result<TimeSeries> {
        let values = self
            .totals
            .get(country)
            .ok_or_else(|| CliError::CountryNotFound(country.to_string()))?;
        Ok(TimeSeries::new(country, self.start, values.clone())?)
    }
}

pub fn parse_jhu_csv(path: &Path, country: &str, cutoff: NaiveDate) -> Result<TimeSeries> {
    JhuTable::read(path, cutoff)?.series(country)
}
