//! Percentage error metrics and their k-period extension.
//!
//! Base metrics compare one vector of actuals against one vector of
//! forecasts. The k-period lift takes a `P x k` matrix of forecasts (one
//! row per input sequence, one column per step ahead), applies the base
//! metric down each column and averages the `k` column scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A metric value in percentage points (`0.13` means 0.13%).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricValue(f64);

impl MetricValue {
    fn new(percent: f64) -> Self {
        debug_assert!(percent.is_finite() && percent >= 0.0, "metric {percent}");
        MetricValue(percent)
    }

    pub fn percent(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for MetricValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}%", self.0)
    }
}

/// Signature shared by [`mape`] and [`mdsa`].
pub type BaseMetric = fn(&[f64], &[f64]) -> Result<MetricValue>;

fn check_lengths(actuals: &[f64], predictions: &[f64]) -> Result<()> {
    if actuals.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: actuals.len(),
            right: predictions.len(),
        });
    }
    if actuals.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteValue { index }),
        None => Ok(()),
    }
}

/// Mean absolute percentage error.
pub fn mape(actuals: &[f64], predictions: &[f64]) -> Result<MetricValue> {
    check_lengths(actuals, predictions)?;
    check_finite(actuals)?;
    check_finite(predictions)?;
    if let Some(index) = actuals.iter().position(|&a| a == 0.0) {
        return Err(Error::ZeroActual { index });
    }
    let sum: f64 = actuals
        .iter()
        .zip(predictions)
        .map(|(&a, &p)| (p - a).abs() / a.abs())
        .sum();
    Ok(MetricValue::new(100.0 * sum / actuals.len() as f64))
}

/// Median symmetric accuracy: `100 * (exp(median |ln(p / a)|) - 1)`.
pub fn mdsa(actuals: &[f64], predictions: &[f64]) -> Result<MetricValue> {
    check_lengths(actuals, predictions)?;
    check_finite(actuals)?;
    check_finite(predictions)?;
    for values in [actuals, predictions] {
        if let Some(index) = values.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositiveValue { index });
        }
    }
    let mut log_ratios: Vec<f64> = actuals
        .iter()
        .zip(predictions)
        .map(|(&a, &p)| (p / a).ln().abs())
        .collect();
    let m = median(&mut log_ratios);
    Ok(MetricValue::new(100.0 * m.exp_m1()))
}

/// Median of a non-empty slice; an even count averages the central pair.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Actual and forecast values for `P` sequences over a `k`-step horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonPredictions {
    actuals: Vec<Vec<f64>>,
    predictions: Vec<Vec<f64>>,
}

impl HorizonPredictions {
    /// Rows are sequences, columns are steps ahead. Both matrices must be
    /// rectangular with the same shape and at least one cell, and every
    /// actual must be strictly positive.
    pub fn new(actuals: Vec<Vec<f64>>, predictions: Vec<Vec<f64>>) -> Result<Self> {
        let sequences = actuals.len();
        let horizon = actuals.first().map_or(0, Vec::len);
        if sequences == 0 || horizon == 0 || predictions.len() != sequences {
            return Err(Error::InvalidShape);
        }
        if actuals
            .iter()
            .chain(&predictions)
            .any(|row| row.len() != horizon)
        {
            return Err(Error::InvalidShape);
        }
        for (p, row) in actuals.iter().enumerate() {
            if row.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
                return Err(Error::NonPositiveValue { index: p });
            }
        }
        Ok(Self {
            actuals,
            predictions,
        })
    }

    pub fn sequences(&self) -> usize {
        self.actuals.len()
    }

    pub fn horizon(&self) -> usize {
        self.actuals[0].len()
    }

    pub fn actuals(&self) -> &[Vec<f64>] {
        &self.actuals
    }

    pub fn predictions(&self) -> &[Vec<f64>] {
        &self.predictions
    }

    /// Step `step` (0-based) across all sequences: `(actuals, predictions)`.
    pub fn column(&self, step: usize) -> (Vec<f64>, Vec<f64>) {
        (
            self.actuals.iter().map(|r| r[step]).collect(),
            self.predictions.iter().map(|r| r[step]).collect(),
        )
    }
}

/// Mean over steps of `base` evaluated across sequences at each step.
pub fn k_period_metric(data: &HorizonPredictions, base: BaseMetric) -> Result<MetricValue> {
    let k = data.horizon();
    let mut total = 0.0;
    for step in 0..k {
        let (a, p) = data.column(step);
        total += base(&a, &p)?.percent();
    }
    Ok(MetricValue::new(total / k as f64))
}

pub fn kmape(data: &HorizonPredictions) -> Result<MetricValue> {
    k_period_metric(data, mape)
}

pub fn kmdsa(data: &HorizonPredictions) -> Result<MetricValue> {
    k_period_metric(data, mdsa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn hp(a: Vec<Vec<f64>>, p: Vec<Vec<f64>>) -> HorizonPredictions {
        HorizonPredictions::new(a, p).unwrap()
    }

    #[test]
    fn mape_examples() {
        assert_abs_diff_eq!(
            mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap().percent(),
            10.0,
            epsilon = 1e-9
        );
        assert_eq!(
            mape(&[100.0, 200.0], &[100.0, 200.0]).unwrap().percent(),
            0.0
        );
        assert_abs_diff_eq!(
            mape(&[100.0], &[150.0]).unwrap().percent(),
            50.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn mape_errors() {
        assert_eq!(
            mape(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        );
        assert_eq!(
            mape(&[1.0, 0.0], &[1.0, 2.0]),
            Err(Error::ZeroActual { index: 1 })
        );
        assert_eq!(mape(&[], &[]), Err(Error::EmptyInput));
        assert_eq!(
            mape(&[1.0], &[f64::NAN]),
            Err(Error::NonFiniteValue { index: 0 })
        );
    }

    #[test]
    fn mdsa_examples() {
        assert_abs_diff_eq!(
            mdsa(&[100.0], &[110.0]).unwrap().percent(),
            10.0,
            epsilon = 1e-9
        );
        assert_eq!(mdsa(&[5.0, 7.0], &[5.0, 7.0]).unwrap().percent(), 0.0);
        let three = mdsa(&[100.0; 3], &[110.0, 100.0 / 1.1, 100.0]).unwrap();
        assert_abs_diff_eq!(three.percent(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn mdsa_even_count_averages_central_pair() {
        // |ln| values: ln 2, ln 4 -> median ln(sqrt 8)
        let v = mdsa(&[1.0, 1.0], &[2.0, 4.0]).unwrap().percent();
        assert_abs_diff_eq!(v, 100.0 * (8f64.sqrt() - 1.0), epsilon = 1e-9);
    }

    #[test]
    fn mdsa_errors() {
        assert_eq!(
            mdsa(&[1.0], &[0.0]),
            Err(Error::NonPositiveValue { index: 0 })
        );
        assert_eq!(
            mdsa(&[-1.0], &[1.0]),
            Err(Error::NonPositiveValue { index: 0 })
        );
        assert!(matches!(
            mdsa(&[1.0], &[]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn mdsa_zero_when_half_the_ratios_are_one() {
        let v = mdsa(&[10.0, 10.0, 10.0], &[10.0, 10.0, 1000.0]).unwrap();
        assert_eq!(v.percent(), 0.0);
    }

    #[test]
    fn horizon_shape_validation() {
        assert_eq!(
            HorizonPredictions::new(vec![], vec![]),
            Err(Error::InvalidShape)
        );
        assert_eq!(
            HorizonPredictions::new(
                vec![vec![1.0, 2.0], vec![1.0]],
                vec![vec![1.0, 2.0], vec![1.0]]
            ),
            Err(Error::InvalidShape)
        );
        assert_eq!(
            HorizonPredictions::new(vec![vec![1.0]], vec![vec![1.0], vec![1.0]]),
            Err(Error::InvalidShape)
        );
        assert!(matches!(
            HorizonPredictions::new(vec![vec![0.0]], vec![vec![1.0]]),
            Err(Error::NonPositiveValue { .. })
        ));
    }

    #[test]
    fn k_period_single_sequence() {
        let d = hp(vec![vec![100.0, 100.0]], vec![vec![110.0, 120.0]]);
        assert_abs_diff_eq!(kmape(&d).unwrap().percent(), 15.0, epsilon = 1e-9);
    }

    #[test]
    fn kmape_two_sequences() {
        let d = hp(
            vec![vec![100.0, 200.0], vec![100.0, 200.0]],
            vec![vec![110.0, 220.0], vec![90.0, 180.0]],
        );
        assert_abs_diff_eq!(kmape(&d).unwrap().percent(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn kmdsa_three_sequences() {
        let d = hp(
            vec![vec![100.0]; 3],
            vec![vec![110.0], vec![100.0 / 1.1], vec![100.0]],
        );
        assert_abs_diff_eq!(kmdsa(&d).unwrap().percent(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn perfect_forecasts_score_zero() {
        let a = vec![vec![3.0, 4.0, 5.0], vec![6.0, 7.0, 8.0]];
        let d = hp(a.clone(), a);
        assert_eq!(kmape(&d).unwrap().percent(), 0.0);
        assert_eq!(kmdsa(&d).unwrap().percent(), 0.0);
    }

    #[test]
    fn kmdsa_is_more_robust_than_kmape() {
        let a = vec![vec![100.0]; 3];
        let clean = hp(a.clone(), vec![vec![110.0], vec![100.0 / 1.1], vec![100.0]]);
        let corrupt = hp(a, vec![vec![110.0], vec![100.0 / 1.1], vec![10_000.0]]);
        let d_mape = kmape(&corrupt).unwrap().percent() - kmape(&clean).unwrap().percent();
        let d_mdsa = kmdsa(&corrupt).unwrap().percent() - kmdsa(&clean).unwrap().percent();
        assert!(d_mdsa.abs() < d_mape.abs());
    }

    fn positive_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec(0.1f64..1e6, n),
                prop::collection::vec(0.1f64..1e6, n),
            )
        })
    }

    proptest! {
        #[test]
        fn mdsa_is_symmetric((a, p) in positive_pair()) {
            let lhs = mdsa(&a, &p).unwrap().percent();
            let rhs = mdsa(&p, &a).unwrap().percent();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        }

        #[test]
        fn mape_zero_iff_equal((a, p) in positive_pair()) {
            prop_assert_eq!(mape(&a, &a).unwrap().percent(), 0.0);
            let same = a == p;
            prop_assert_eq!(mape(&a, &p).unwrap().percent() == 0.0, same);
        }
    }
}
