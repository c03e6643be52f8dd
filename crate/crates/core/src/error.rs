use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // series
    #[error("series must be non-empty")]
    EmptySeries,
    #[error("series contains a negative or non-finite value at index {index}")]
    InvalidValue { index: usize },
    #[error("no value reaches the truncation threshold {threshold}")]
    EmptyAfterTruncation { threshold: f64 },
    #[error("truncation threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("series of length {len} is too short (need at least {needed})")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("window length and horizon must be at least 1")]
    InvalidWindowShape,
    #[error("{0} samples cannot be split; more than 20 are required")]
    TooFewSamples(usize),

    // metrics
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("actual value at index {index} is zero")]
    ZeroActual { index: usize },
    #[error("non-positive value at index {index}")]
    NonPositiveValue { index: usize },
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("metric input is empty")]
    EmptyInput,
    #[error("horizon matrix is ragged or empty")]
    InvalidShape,

    // arima
    #[error("orders ({p}, {d}, {q}) out of range [0, 5]")]
    InvalidOrders { p: usize, d: usize, q: usize },
    #[error("integration needs {needed} trailing values, got {got}")]
    InsufficientTail { needed: usize, got: usize },
    #[error("no order combination could be fitted")]
    NoViableOrders,

    // neural
    #[error("shape mismatch in {0}")]
    ShapeMismatch(&'static str),
    #[error("kernel width {kernel} exceeds input length {len}")]
    KernelTooWide { kernel: usize, len: usize },
    #[error("window length {got} does not match model input length {expected}")]
    WindowLengthMismatch { expected: usize, got: usize },
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}")]
    NumericalDivergence { epoch: usize },
    #[error("all {0} initialisations diverged")]
    AllInitsDiverged(usize),
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    // forecasting
    #[error("forecast horizon must be at least 1")]
    InvalidHorizon,
    #[error("non-finite forecast at step {step}")]
    NonFiniteForecast { step: usize },
    #[error("no test sample has a target of length {horizon}")]
    NoEvaluableSamples { horizon: usize },
}
