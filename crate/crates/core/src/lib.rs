//! Forecasting toolkit for daily cumulative case counts.
//!
//! The crate is organised bottom-up:
//!
//! - [`series`]: the canonical series type, threshold truncation, sliding
//!   windows and the chronological train/validation/test split.
//! - [`metrics`]: MAPE, MdSA and their k-period lifts (kMAPE, kMdSA).
//! - [`arima`]: differencing, conditional-sum-of-squares ARIMA estimation
//!   and order grid search.
//! - [`neural`]: five LSTM-family regressors with hand-written gradients,
//!   Adam, and best-of-N initialisation.
//! - [`forecast`]: the model-agnostic recursive multi-step engine and
//!   test-set evaluation.
//!
//! Data-parallel loops (initialisations, grid cells, test windows) go
//! through [`exec::Execution`], which uses rayon when the `parallel`
//! feature is enabled and runs sequentially otherwise. Results never
//! depend on the schedule.

pub mod arima;
pub mod error;
pub mod exec;
pub mod forecast;
pub mod metrics;
pub mod neural;
pub mod series;

pub use error::{Error, Result};
pub use exec::Execution;
