//! ARIMA(p, d, q) estimation and forecasting.
//!
//! The differenced series `w` follows
//!
//! ```text
//! w[t] = c + sum_i ar[i] * w[t-1-i] + e[t] + sum_j ma[j] * e[t-1-j]
//! ```
//!
//! Parameters minimise the conditional sum of squares (CSS) of `e`, with
//! innovations before the first computable index fixed at zero. The
//! optimiser starts from a Hannan-Rissanen two-stage regression and refines
//! with damped Gauss-Newton.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forecast::{ForecastSession, Forecaster};
use crate::metrics::mape;
use crate::series::WindowSample;

const MAX_ORDER: usize = 5;
const MAX_ITERATIONS: usize = 200;
const RELATIVE_TOLERANCE: f64 = 1e-8;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaOrders {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrders {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        if p > MAX_ORDER || d > MAX_ORDER || q > MAX_ORDER {
            return Err(Error::InvalidOrders { p, d, q });
        }
        Ok(Self { p, d, q })
    }

    /// Smallest series length [`fit_arima`] accepts for these orders.
    pub fn min_length(&self) -> usize {
        self.d + self.p.max(self.q) + 3
    }

    fn n_params(&self) -> usize {
        1 + self.p + self.q
    }
}

impl Default for ArimaOrders {
    fn default() -> Self {
        Self { p: 1, d: 2, q: 2 }
    }
}

impl std::fmt::Display for ArimaOrders {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.p, self.d, self.q)
    }
}

/// Applies first differencing `d` times.
pub fn difference(values: &[f64], d: usize) -> Result<Vec<f64>> {
    if values.len() <= d {
        return Err(Error::SeriesTooShort {
            len: values.len(),
            needed: d + 1,
        });
    }
    let mut out = values.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Inverts [`difference`] for a continuation.
///
/// `diff_forecasts` continues the `d`-times differenced series; `tail` must
/// end with at least the last `d` raw values preceding the continuation.
pub fn integrate(diff_forecasts: &[f64], tail: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut levels = level_tails(tail, d)?;
    Ok(diff_forecasts
        .iter()
        .map(|&w| integrate_step(&mut levels, w))
        .collect())
}

/// Last value of each differencing level `0..d`, computed from raw values.
fn level_tails(tail: &[f64], d: usize) -> Result<Vec<f64>> {
    if tail.len() < d {
        return Err(Error::InsufficientTail {
            needed: d,
            got: tail.len(),
        });
    }
    let mut level = tail[tail.len() - d..].to_vec();
    let mut lasts = Vec::with_capacity(d);
    for _ in 0..d {
        lasts.push(*level.last().expect("non-empty level"));
        level = level.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(lasts)
}

fn integrate_step(levels: &mut [f64], w: f64) -> f64 {
    let mut carry = w;
    for level in levels.iter_mut().rev() {
        *level += carry;
        carry = *level;
    }
    carry
}

/// Coefficients packed as `[c, ar.., ma..]`.
#[derive(Debug, Clone, PartialEq)]
struct Params {
    p: usize,
    values: Vec<f64>,
}

impl Params {
    fn zeros(orders: &ArimaOrders) -> Self {
        Self {
            p: orders.p,
            values: vec![0.0; orders.n_params()],
        }
    }

    fn intercept(&self) -> f64 {
        self.values[0]
    }

    fn ar(&self) -> &[f64] {
        &self.values[1..1 + self.p]
    }

    fn ma(&self) -> &[f64] {
        &self.values[1 + self.p..]
    }
}

fn lagged(series: &[f64], t: usize, lag: usize) -> f64 {
    if t >= lag {
        series[t - lag]
    } else {
        0.0
    }
}

/// One-step prediction of `w[t]` given everything before `t`.
fn predict_at(params: &Params, w: &[f64], e: &[f64], t: usize) -> f64 {
    let ar: f64 = params
        .ar()
        .iter()
        .enumerate()
        .map(|(i, phi)| phi * lagged(w, t, i + 1))
        .sum();
    let ma: f64 = params
        .ma()
        .iter()
        .enumerate()
        .map(|(j, theta)| theta * lagged(e, t, j + 1))
        .sum();
    params.intercept() + ar + ma
}

/// CSS innovations; entries before index `p` are zero.
fn innovations(params: &Params, w: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for t in params.p..w.len() {
        e[t] = w[t] - predict_at(params, w, &e, t);
    }
    e
}

fn css(e: &[f64]) -> f64 {
    e.iter().map(|v| v * v).sum()
}

/// Jacobian of the innovations with respect to `[c, ar.., ma..]`.
fn innovation_jacobian(params: &Params, w: &[f64], e: &[f64]) -> DMatrix<f64> {
    let n = params.values.len();
    let (p, ma) = (params.p, params.ma());
    let mut jac = DMatrix::<f64>::zeros(w.len(), n);
    for t in p..w.len() {
        for k in 0..n {
            let direct = if k == 0 {
                -1.0
            } else if k <= p {
                -lagged(w, t, k)
            } else {
                -lagged(e, t, k - p)
            };
            let feedback: f64 = ma
                .iter()
                .enumerate()
                .filter(|(j, _)| t > *j)
                .map(|(j, theta)| theta * jac[(t - j - 1, k)])
                .sum();
            jac[(t, k)] = direct - feedback;
        }
    }
    jac
}

fn least_squares(design: &DMatrix<f64>, target: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = design.clone().svd(true, true);
    let x = svd.solve(target, 1e-12).ok()?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Regresses `w[t]` on an intercept plus the given lagged regressors over
/// `t in start..w.len()`.
fn regress(w: &[f64], start: usize, regressors: &[(&[f64], usize)]) -> Option<DVector<f64>> {
    let rows = w.len().checked_sub(start)?;
    let cols = 1 + regressors.len();
    if rows < cols {
        return None;
    }
    let design = DMatrix::from_fn(rows, cols, |r, c| {
        if c == 0 {
            1.0
        } else {
            let (series, lag) = regressors[c - 1];
            lagged(series, start + r, lag)
        }
    });
    let target = DVector::from_iterator(rows, w[start..].iter().copied());
    least_squares(&design, &target)
}

/// Hannan-Rissanen: a long autoregression supplies innovation proxies,
/// then `w` is regressed on its own lags and the lagged proxies.
fn hannan_rissanen(orders: &ArimaOrders, w: &[f64]) -> Params {
    let mut params = Params::zeros(orders);
    let m = w.len();
    let (p, q) = (orders.p, orders.q);

    let proxies = if q == 0 {
        vec![0.0; m]
    } else {
        let cap = m.saturating_sub(2) / 2;
        let long = (p.max(q) + 2 + (m as f64).ln() as usize).min(cap);
        if long == 0 {
            return params;
        }
        let lags: Vec<(&[f64], usize)> = (1..=long).map(|l| (w, l)).collect();
        let Some(beta) = regress(w, long, &lags) else {
            return params;
        };
        let mut e = vec![0.0; m];
        for t in long..m {
            let fit: f64 = beta[0] + (1..=long).map(|l| beta[l] * w[t - l]).sum::<f64>();
            e[t] = w[t] - fit;
        }
        e
    };

    let mut lags: Vec<(&[f64], usize)> = (1..=p).map(|l| (w, l)).collect();
    lags.extend((1..=q).map(|l| (proxies.as_slice(), l)));
    let preferred = if q == 0 { p } else { p.max(m / 4 + q) };
    let beta = regress(w, preferred, &lags).or_else(|| regress(w, p.max(q), &lags));
    if let Some(beta) = beta {
        params.values.copy_from_slice(beta.as_slice());
    }
    params
}

struct Refined {
    params: Params,
    innovations: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

/// Damped Gauss-Newton on the CSS objective. Steps are halved until the
/// objective does not increase, so accepted iterates are monotone.
fn gauss_newton(mut params: Params, w: &[f64]) -> Refined {
    let mut e = innovations(&params, w);
    let mut objective = css(&e);
    if !objective.is_finite() {
        params = Params {
            p: params.p,
            values: vec![0.0; params.values.len()],
        };
        e = innovations(&params, w);
        objective = css(&e);
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jac = innovation_jacobian(&params, w, &e);
        let rhs = -DVector::from_column_slice(&e);
        let Some(step) = least_squares(&jac, &rhs) else {
            converged = true;
            break;
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate = Params {
                p: params.p,
                values: params
                    .values
                    .iter()
                    .zip(step.iter())
                    .map(|(v, s)| v + scale * s)
                    .collect(),
            };
            let ce = innovations(&candidate, w);
            let cobj = css(&ce);
            if cobj.is_finite() && cobj <= objective {
                accepted = Some((candidate, ce, cobj));
                break;
            }
            scale *= 0.5;
        }
        let Some((candidate, ce, cobj)) = accepted else {
            converged = true;
            break;
        };
        let change = (objective - cobj) / objective.max(f64::MIN_POSITIVE);
        params = candidate;
        e = ce;
        objective = cobj;
        if change < RELATIVE_TOLERANCE {
            converged = true;
            break;
        }
    }
    Refined {
        params,
        innovations: e,
        objective,
        iterations,
        converged,
    }
}

/// A fitted ARIMA model together with the state needed to forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    orders: ArimaOrders,
    intercept: f64,
    ar_coeffs: Vec<f64>,
    ma_coeffs: Vec<f64>,
    history: Vec<f64>,
    differenced: Vec<f64>,
    residuals: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

/// Fits an ARIMA model by conditional sum of squares.
///
/// If Gauss-Newton hits the iteration cap the best iterate is returned
/// with [`ArimaModel::converged`] set to false.
pub fn fit_arima(values: &[f64], orders: ArimaOrders) -> Result<ArimaModel> {
    let orders = ArimaOrders::new(orders.p, orders.d, orders.q)?;
    if values.len() < orders.min_length() {
        return Err(Error::SeriesTooShort {
            len: values.len(),
            needed: orders.min_length(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    let w = difference(values, orders.d)?;
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let spread = w.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let scale = w.iter().map(|v| v.abs()).fold(1.0, f64::max);

    let refined = if spread <= 1e-12 * scale {
        // Constant differenced series: least squares is singular, the
        // intercept alone reproduces it.
        let mut params = Params::zeros(&orders);
        params.values[0] = mean;
        Refined {
            params,
            innovations: vec![0.0; w.len()],
            objective: 0.0,
            iterations: 0,
            converged: true,
        }
    } else {
        // On short, spiky windows the long-AR proxy can start far from any
        // sensible fit, so a mean-only start is refined too and the lower
        // objective wins.
        let mut plain = Params::zeros(&orders);
        plain.values[0] = mean;
        let from_plain = gauss_newton(plain, &w);
        let from_hr = gauss_newton(hannan_rissanen(&orders, &w), &w);
        if from_hr.objective.is_finite() && from_hr.objective <= from_plain.objective {
            from_hr
        } else {
            from_plain
        }
    };
    if !refined.converged {
        debug!(
            "ARIMA{orders} CSS did not converge in {} iterations (objective {})",
            refined.iterations, refined.objective
        );
    }
    Ok(ArimaModel {
        orders,
        intercept: refined.params.intercept(),
        ar_coeffs: refined.params.ar().to_vec(),
        ma_coeffs: refined.params.ma().to_vec(),
        history: values.to_vec(),
        differenced: w,
        residuals: refined.innovations,
        objective: refined.objective,
        iterations: refined.iterations,
        converged: refined.converged,
    })
}

impl ArimaModel {
    pub fn orders(&self) -> ArimaOrders {
        self.orders
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn ar_coeffs(&self) -> &[f64] {
        &self.ar_coeffs
    }

    pub fn ma_coeffs(&self) -> &[f64] {
        &self.ma_coeffs
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn differenced(&self) -> &[f64] {
        &self.differenced
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Conditional sum of squares at the returned coefficients.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    fn params(&self) -> Params {
        let mut values = vec![self.intercept];
        values.extend_from_slice(&self.ar_coeffs);
        values.extend_from_slice(&self.ma_coeffs);
        Params {
            p: self.orders.p,
            values,
        }
    }

    fn next_differenced(&self) -> f64 {
        let t = self.differenced.len();
        predict_at(&self.params(), &self.differenced, &self.residuals, t)
    }

    /// Forecast of the next raw value, with future innovations at zero.
    pub fn forecast_one(&self) -> f64 {
        let w = self.next_differenced();
        let mut levels = level_tails(&self.history, self.orders.d).expect("history longer than d");
        integrate_step(&mut levels, w)
    }

    /// Appends the model's own forecast with a zero innovation and returns
    /// it. Coefficients are not re-estimated.
    pub fn advance(&mut self) -> f64 {
        let w = self.next_differenced();
        let mut levels = level_tails(&self.history, self.orders.d).expect("history longer than d");
        let x = integrate_step(&mut levels, w);
        self.history.push(x);
        self.differenced.push(w);
        self.residuals.push(0.0);
        x
    }

    /// Appends an observed raw value; its innovation is the one-step
    /// forecast error on the differenced scale.
    pub fn observe(&mut self, value: f64) {
        let predicted = self.next_differenced();
        self.history.push(value);
        let d = self.orders.d;
        let w = *difference(&self.history[self.history.len() - d - 1..], d)
            .expect("d + 1 values")
            .last()
            .expect("one value");
        self.differenced.push(w);
        self.residuals.push(w - predicted);
    }
}

/// Forecaster that fits ARIMA on each input window.
///
/// Multi-step forecasts reuse the coefficients fitted on the original
/// window: each appended prediction enters with a zero innovation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArimaForecaster {
    pub orders: ArimaOrders,
    pub n_s: usize,
}

impl ArimaForecaster {
    pub fn new(orders: ArimaOrders, n_s: usize) -> Self {
        Self { orders, n_s }
    }
}

struct ArimaSession {
    model: ArimaModel,
    started: bool,
}

impl ForecastSession for ArimaSession {
    fn step(&mut self, _window: &[f64]) -> Result<f64> {
        if !self.started {
            self.started = true;
            return Ok(self.model.forecast_one());
        }
        // The engine appended the previous forecast; mirror that with a
        // zero innovation and predict from the frozen coefficients.
        self.model.advance();
        Ok(self.model.forecast_one())
    }
}

impl Forecaster for ArimaForecaster {
    fn n_s(&self) -> usize {
        self.n_s
    }

    fn predict_next(&self, window: &[f64]) -> Result<f64> {
        Ok(fit_arima(window, self.orders)?.forecast_one())
    }

    fn session<'a>(&'a self, window: &[f64]) -> Result<Box<dyn ForecastSession + 'a>> {
        Ok(Box::new(ArimaSession {
            model: fit_arima(window, self.orders)?,
            started: false,
        }))
    }
}

/// The 27 candidate orders `{1,2,3}^3`, lexicographic.
pub fn candidate_orders() -> Vec<ArimaOrders> {
    let mut out = Vec::with_capacity(27);
    for p in 1..=3 {
        for d in 1..=3 {
            for q in 1..=3 {
                out.push(ArimaOrders { p, d, q });
            }
        }
    }
    out
}

/// Scores every candidate and returns the argmin with its score.
///
/// Candidates whose scorer fails or returns a non-finite value are skipped.
/// Ties prefer the smaller `p + d + q`, then lexicographic order.
pub fn grid_search_orders<F>(exec: Execution, score: F) -> Result<(ArimaOrders, f64)>
where
    F: Fn(ArimaOrders) -> Result<f64> + Sync + Send,
{
    let candidates = candidate_orders();
    let scores = exec.map_slice(&candidates, |&o| score(o));
    candidates
        .into_iter()
        .zip(scores)
        .filter_map(|(o, s)| s.ok().filter(|v| v.is_finite()).map(|v| (o, v)))
        .min_by(|(oa, a), (ob, b)| {
            a.total_cmp(b)
                .then((oa.p + oa.d + oa.q).cmp(&(ob.p + ob.d + ob.q)))
                .then(oa.cmp(ob))
        })
        .ok_or(Error::NoViableOrders)
}

/// One-step MAPE (equivalently 1-step kMAPE) of per-window ARIMA fits.
pub fn window_score(windows: &[WindowSample], orders: ArimaOrders) -> Result<f64> {
    let mut actuals = Vec::with_capacity(windows.len());
    let mut preds = Vec::with_capacity(windows.len());
    for w in windows {
        let target = *w.targets.first().ok_or(Error::EmptyInput)?;
        actuals.push(target);
        preds.push(fit_arima(&w.inputs, orders)?.forecast_one());
    }
    Ok(mape(&actuals, &preds)?.percent())
}
