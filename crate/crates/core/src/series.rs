//! Daily case-count series, threshold truncation, windowing and splitting.

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of windows held out for validation and for testing.
pub const HOLDOUT: usize = 10;

/// One region's daily cumulative counts, anchored to a calendar date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    region_id: String,
    start_date: NaiveDate,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        region_id: impl Into<String>,
        start_date: NaiveDate,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidValue { index });
        }
        Ok(Self {
            region_id: region_id.into(),
            start_date,
            values,
        })
    }

    pub fn region_id(&self) -> &str {
        &self.region_id
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    /// Date of the last observation.
    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Drops the leading points below `threshold`.
    ///
    /// Only the head is cut: once a value reaches the threshold every later
    /// point is kept, including reporting dips that fall back below it.
    pub fn truncate_below_threshold(&self, threshold: f64) -> Result<TimeSeries> {
        if !(threshold > 0.0) {
            return Err(Error::InvalidThreshold(threshold));
        }
        let first = self
            .values
            .iter()
            .position(|&v| v >= threshold)
            .ok_or(Error::EmptyAfterTruncation { threshold })?;
        Ok(TimeSeries {
            region_id: self.region_id.clone(),
            start_date: self.date_at(first),
            values: self.values[first..].to_vec(),
        })
    }

    pub fn make_windows(&self, n_s: usize, n_p: usize) -> Result<Vec<WindowSample>> {
        make_windows(&self.values, n_s, n_p)
    }
}

/// An input window of `n_s` values and the `n_p` values that follow it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    /// Index in the source series of the last input value.
    pub window_end_index: usize,
}

/// Slides a window of `n_s` inputs and `n_p` targets over `values` with
/// stride one.
pub fn make_windows(values: &[f64], n_s: usize, n_p: usize) -> Result<Vec<WindowSample>> {
    if n_s == 0 || n_p == 0 {
        return Err(Error::InvalidWindowShape);
    }
    let span = n_s + n_p;
    if values.len() < span {
        return Err(Error::SeriesTooShort {
            len: values.len(),
            needed: span,
        });
    }
    Ok(values
        .windows(span)
        .enumerate()
        .map(|(j, w)| WindowSample {
            inputs: w[..n_s].to_vec(),
            targets: w[n_s..].to_vec(),
            window_end_index: j + n_s - 1,
        })
        .collect())
}

/// Chronological partition of windowed samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedSplit {
    pub train: Vec<WindowSample>,
    pub validation: Vec<WindowSample>,
    pub test: Vec<WindowSample>,
}

impl SupervisedSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }
}

/// Last ten samples become the test set, the ten before them validation,
/// the rest training. Order is preserved; nothing is shuffled.
pub fn split_train_val_test(samples: Vec<WindowSample>) -> Result<SupervisedSplit> {
    let n_d = samples.len();
    if n_d <= 2 * HOLDOUT {
        return Err(Error::TooFewSamples(n_d));
    }
    let mut train = samples;
    let test = train.split_off(n_d - HOLDOUT);
    let validation = train.split_off(n_d - 2 * HOLDOUT);
    Ok(SupervisedSplit {
        train,
        validation,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 22).unwrap()
    }

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::new("XX", day0(), values.to_vec()).unwrap()
    }

    fn ramp(n: usize) -> Vec<f64> {
        (1..=n).map(|v| v as f64).collect()
    }

    #[test]
    fn rejects_bad_series() {
        assert_eq!(
            TimeSeries::new("a", day0(), vec![]),
            Err(Error::EmptySeries)
        );
        assert_eq!(
            TimeSeries::new("a", day0(), vec![1.0, -1.0]),
            Err(Error::InvalidValue { index: 1 })
        );
    }

    #[test]
    fn truncation_drops_head_and_moves_start() {
        let s = series(&[50.0, 80.0, 120.0, 150.0]);
        let t = s.truncate_below_threshold(100.0).unwrap();
        assert_eq!(t.values(), &[120.0, 150.0]);
        assert_eq!(t.start_date(), day0() + Duration::days(2));
        assert_eq!(t.end_date(), s.end_date());
    }

    #[test]
    fn truncation_keeps_series_already_above() {
        let s = series(&[200.0, 300.0]);
        assert_eq!(s.truncate_below_threshold(100.0).unwrap(), s);
    }

    #[test]
    fn truncation_keeps_later_dips() {
        let s = series(&[10.0, 120.0, 90.0, 130.0]);
        assert_eq!(
            s.truncate_below_threshold(100.0).unwrap().values(),
            &[120.0, 90.0, 130.0]
        );
    }

    #[test]
    fn truncation_errors() {
        let s = series(&[10.0, 20.0]);
        assert!(matches!(
            s.truncate_below_threshold(100.0),
            Err(Error::EmptyAfterTruncation { .. })
        ));
        assert!(matches!(
            s.truncate_below_threshold(0.0),
            Err(Error::InvalidThreshold(_))
        ));
    }

    #[test]
    fn windows_over_ramp() {
        let w = make_windows(&ramp(10), 3, 1).unwrap();
        assert_eq!(w.len(), 7);
        assert_eq!(w[0].inputs, vec![1.0, 2.0, 3.0]);
        assert_eq!(w[0].targets, vec![4.0]);
        assert_eq!(w[0].window_end_index, 2);
        assert_eq!(w[6].inputs, vec![7.0, 8.0, 9.0]);
        assert_eq!(w[6].targets, vec![10.0]);
    }

    #[test]
    fn single_window_fits_exactly() {
        let w = make_windows(&ramp(4), 3, 1).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].inputs, vec![1.0, 2.0, 3.0]);
        assert_eq!(w[0].targets, vec![4.0]);
    }

    #[test]
    fn too_short_for_window() {
        assert_eq!(
            make_windows(&ramp(10), 6, 5),
            Err(Error::SeriesTooShort {
                len: 10,
                needed: 11
            })
        );
        assert_eq!(
            make_windows(&ramp(10), 0, 1),
            Err(Error::InvalidWindowShape)
        );
    }

    #[test]
    fn split_sizes() {
        let s = |n: usize| make_windows(&ramp(n + 3), 3, 1).unwrap();
        assert_eq!(split_train_val_test(s(40)).unwrap().sizes(), (20, 10, 10));
        assert_eq!(split_train_val_test(s(21)).unwrap().sizes(), (1, 10, 10));
        assert_eq!(split_train_val_test(s(20)), Err(Error::TooFewSamples(20)));
    }

    #[test]
    fn split_is_chronological() {
        let split = split_train_val_test(make_windows(&ramp(60), 3, 1).unwrap()).unwrap();
        let last_train = split.train.last().unwrap().window_end_index;
        let first_val = split.validation[0].window_end_index;
        let last_val = split.validation.last().unwrap().window_end_index;
        assert!(last_train < first_val);
        assert!(last_val < split.test[0].window_end_index);
        assert_eq!(split.test.last().unwrap().targets, vec![60.0]);
    }

    proptest! {
        #[test]
        fn truncation_is_idempotent(values in prop::collection::vec(0.0f64..500.0, 1..60), thr in 1.0f64..400.0) {
            let s = series(&values);
            if let Ok(once) = s.truncate_below_threshold(thr) {
                prop_assert_eq!(once.truncate_below_threshold(thr).unwrap(), once);
            }
        }

        #[test]
        fn windows_and_split_reconstruct_series(
            values in prop::collection::vec(0.0f64..1e6, 40..90),
            n_s in 1usize..8,
            n_p in 1usize..6,
        ) {
            prop_assume!(values.len() >= n_s + n_p + 20);
            let split = split_train_val_test(make_windows(&values, n_s, n_p).unwrap()).unwrap();
            let all: Vec<&WindowSample> =
                split.train.iter().chain(&split.validation).chain(&split.test).collect();
            prop_assert!(all.windows(2).all(|w| w[0].window_end_index < w[1].window_end_index));
            let mut rebuilt = all[0].inputs.clone();
            rebuilt.extend(all.iter().map(|s| s.targets[0]));
            rebuilt.extend_from_slice(&all.last().unwrap().targets[1..]);
            prop_assert_eq!(rebuilt, values);
        }

        #[test]
        fn targets_reappear_as_later_inputs(len in 5usize..40, n_s in 1usize..5, n_p in 1usize..4) {
            prop_assume!(len >= n_s + n_p);
            let values: Vec<f64> = (0..len).map(|v| v as f64).collect();
            let windows = make_windows(&values, n_s, n_p).unwrap();
            for w in &windows {
                for &t in &w.targets {
                    let idx = t as usize;
                    let as_input = windows.iter().any(|o| o.window_end_index > w.window_end_index && o.inputs.contains(&t));
                    prop_assert!(as_input || idx + n_p >= len);
                }
            }
        }
    }
}
