//! Recursive multi-step forecasting and test-set evaluation.
//!
//! The engine only sees raw-scale windows. A model that needs to scale or
//! difference its input does so behind [`Forecaster`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{kmape, kmdsa, HorizonPredictions, MetricValue};
use crate::series::WindowSample;

/// A one-step-ahead predictor over fixed-length windows.
pub trait Forecaster: Sync {
    /// Input window length.
    fn n_s(&self) -> usize;

    fn predict_next(&self, window: &[f64]) -> Result<f64>;

    /// Starts a multi-step forecast from `window`.
    ///
    /// The default session calls [`Forecaster::predict_next`] on every
    /// shifted window. Models that carry state between steps override it.
    fn session<'a>(&'a self, _window: &[f64]) -> Result<Box<dyn ForecastSession + 'a>> {
        Ok(Box::new(Stateless(self)))
    }
}

/// Per-forecast state. `step` receives the current shifted window, whose
/// last element is the previous step's prediction after the first step.
pub trait ForecastSession {
    fn step(&mut self, window: &[f64]) -> Result<f64>;
}

struct Stateless<'a, F: ?Sized>(&'a F);

impl<F: Forecaster + ?Sized> ForecastSession for Stateless<'_, F> {
    fn step(&mut self, window: &[f64]) -> Result<f64> {
        self.0.predict_next(window)
    }
}

impl<T: Forecaster + ?Sized> Forecaster for &T {
    fn n_s(&self) -> usize {
        (**self).n_s()
    }

    fn predict_next(&self, window: &[f64]) -> Result<f64> {
        (**self).predict_next(window)
    }

    fn session<'a>(&'a self, window: &[f64]) -> Result<Box<dyn ForecastSession + 'a>> {
        (**self).session(window)
    }
}

/// Repeats the last observed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Persistence {
    pub n_s: usize,
}

impl Forecaster for Persistence {
    fn n_s(&self) -> usize {
        self.n_s
    }

    fn predict_next(&self, window: &[f64]) -> Result<f64> {
        window.last().copied().ok_or(Error::EmptyInput)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub predictions: Vec<f64>,
    pub source_window_end: usize,
}

impl ForecastResult {
    pub fn horizon(&self) -> usize {
        self.predictions.len()
    }
}

/// Forecasts `n_p` steps by feeding each prediction back into the window:
/// after step one the input is `[x2, .., x_ns, pred1]`, and so on.
pub fn recursive_forecast<F: Forecaster + ?Sized>(
    f: &F,
    window: &[f64],
    n_p: usize,
) -> Result<Vec<f64>> {
    if window.len() != f.n_s() {
        return Err(Error::WindowLengthMismatch {
            expected: f.n_s(),
            got: window.len(),
        });
    }
    if n_p == 0 {
        return Err(Error::InvalidHorizon);
    }
    let mut current = window.to_vec();
    let mut session = f.session(window)?;
    let mut out = Vec::with_capacity(n_p);
    for step in 0..n_p {
        let next = session.step(&current)?;
        if !next.is_finite() {
            return Err(Error::NonFiniteForecast { step });
        }
        out.push(next);
        current.remove(0);
        current.push(next);
    }
    Ok(out)
}

/// Metrics and raw forecasts for one (model, horizon) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub kmape: MetricValue,
    pub kmdsa: MetricValue,
    pub raw: HorizonPredictions,
    pub results: Vec<ForecastResult>,
}

/// Forecasts every sample `n_p` steps ahead and collects the `P x n_p`
/// grid without scoring it.
///
/// Samples whose targets are shorter than `n_p` are skipped.
pub fn horizon_predictions<F: Forecaster + ?Sized>(
    f: &F,
    samples: &[WindowSample],
    n_p: usize,
    exec: Execution,
) -> Result<(HorizonPredictions, Vec<ForecastResult>)> {
    if n_p == 0 {
        return Err(Error::InvalidHorizon);
    }
    let usable: Vec<&WindowSample> = samples.iter().filter(|s| s.targets.len() >= n_p).collect();
    if usable.is_empty() {
        return Err(Error::NoEvaluableSamples { horizon: n_p });
    }
    let forecasts = exec.map_slice(&usable, |s| recursive_forecast(f, &s.inputs, n_p));
    let mut actuals = Vec::with_capacity(usable.len());
    let mut predictions = Vec::with_capacity(usable.len());
    let mut results = Vec::with_capacity(usable.len());
    for (sample, forecast) in usable.iter().zip(forecasts) {
        let forecast = forecast?;
        actuals.push(sample.targets[..n_p].to_vec());
        predictions.push(forecast.clone());
        results.push(ForecastResult {
            predictions: forecast,
            source_window_end: sample.window_end_index,
        });
    }
    Ok((HorizonPredictions::new(actuals, predictions)?, results))
}

/// Forecasts every sample `n_p` steps ahead and scores the grid with
/// kMAPE and kMdSA.
pub fn evaluate<F: Forecaster + ?Sized>(
    f: &F,
    samples: &[WindowSample],
    n_p: usize,
    exec: Execution,
) -> Result<Evaluation> {
    let (raw, results) = horizon_predictions(f, samples, n_p, exec)?;
    Ok(Evaluation {
        kmape: kmape(&raw)?,
        kmdsa: kmdsa(&raw)?,
        raw,
        results,
    })
}
