use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{
    conv1d_backward, conv1d_raw, convlstm_backward, convlstm_step, maxpool1d_indexed,
    ConvLstmGrads, ConvLstmStep, ConvLstmWeights,
};
use super::lstm::{layer_backward, layer_forward, LstmGrads, LstmStep, LstmWeights};
use super::params::ParamSet;
use super::{Architecture, NetworkConfig};
use crate::error::{Error, Result};
use crate::forecast::Forecaster;
use crate::series::WindowSample;

/// Half-width of the uniform initialisation interval.
pub const INIT_BOUND: f64 = 0.05;

/// Per-window input normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaler {
    /// Divide the window by its last element.
    LastValue,
}

impl Scaler {
    pub fn factor(self, window: &[f64]) -> f64 {
        match self {
            Scaler::LastValue => match window.last() {
                Some(&v) if v != 0.0 && v.is_finite() => v,
                _ => 1.0,
            },
        }
    }
}

pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LstmIdx {
    w_x: usize,
    w_h: usize,
    b: usize,
    input: usize,
    hidden: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct DenseIdx {
    w: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ConvIdx {
    kernels: usize,
    biases: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ConvLstmIdx {
    w_x: usize,
    w_h: usize,
    b: usize,
}

/// How a window is cut into subsequences (CNN-LSTM) or frames (ConvLSTM).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Shaping {
    count: usize,
    len: usize,
    kernel: usize,
    conv_len: usize,
    pool: usize,
    pooled_len: usize,
}

impl Shaping {
    fn new(n_s: usize, kernel_max: usize, pool_max: usize) -> Self {
        let count = if n_s.is_multiple_of(2) { 2 } else { 1 };
        let len = n_s / count;
        let kernel = kernel_max.min(len);
        let conv_len = len + 1 - kernel;
        let pool = pool_max.min(conv_len);
        Self {
            count,
            len,
            kernel,
            conv_len,
            pool,
            pooled_len: conv_len.div_ceil(pool),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Vanilla {
        lstm: LstmIdx,
        head: DenseIdx,
    },
    Stacked {
        first: LstmIdx,
        second: LstmIdx,
        head: DenseIdx,
    },
    Bidirectional {
        forward: LstmIdx,
        backward: LstmIdx,
        head: DenseIdx,
    },
    CnnLstm {
        conv: ConvIdx,
        lstm: LstmIdx,
        head: DenseIdx,
        shape: Shaping,
    },
    ConvLstm {
        cell: ConvLstmIdx,
        head: DenseIdx,
        shape: Shaping,
    },
}

fn push_lstm(ps: &mut ParamSet, prefix: &str, input: usize, hidden: usize) -> LstmIdx {
    LstmIdx {
        w_x: ps.push(format!("{prefix}.w_x"), &[4 * hidden, input]),
        w_h: ps.push(format!("{prefix}.w_h"), &[4 * hidden, hidden]),
        b: ps.push(format!("{prefix}.b"), &[4 * hidden]),
        input,
        hidden,
    }
}

fn push_head(ps: &mut ParamSet, input: usize) -> DenseIdx {
    DenseIdx {
        w: ps.push("head.w", &[1, input]),
        b: ps.push("head.b", &[1]),
    }
}

fn build_layout(config: &NetworkConfig) -> (Layout, ParamSet) {
    let mut ps = ParamSet::new();
    let h = config.n_n;
    let layout = match config.architecture {
        Architecture::Vanilla => {
            let lstm = push_lstm(&mut ps, "lstm", 1, h);
            Layout::Vanilla {
                lstm,
                head: push_head(&mut ps, h),
            }
        }
        Architecture::Stacked => {
            let first = push_lstm(&mut ps, "lstm1", 1, h);
            let second = push_lstm(&mut ps, "lstm2", h, h);
            Layout::Stacked {
                first,
                second,
                head: push_head(&mut ps, h),
            }
        }
        Architecture::Bidirectional => {
            let forward = push_lstm(&mut ps, "forward", 1, h);
            let backward = push_lstm(&mut ps, "backward", 1, h);
            Layout::Bidirectional {
                forward,
                backward,
                head: push_head(&mut ps, 2 * h),
            }
        }
        Architecture::CnnLstm => {
            let shape = Shaping::new(config.n_s, config.kernel_size, config.pool_size);
            let conv = ConvIdx {
                kernels: ps.push("conv.kernels", &[config.n_f, shape.kernel]),
                biases: ps.push("conv.b", &[config.n_f]),
            };
            let lstm = push_lstm(&mut ps, "lstm", config.n_f * shape.pooled_len, h);
            Layout::CnnLstm {
                conv,
                lstm,
                head: push_head(&mut ps, h),
                shape,
            }
        }
        Architecture::ConvLstm => {
            let shape = Shaping::new(config.n_s, config.kernel_size, 1);
            let f = config.n_f;
            let cell = ConvLstmIdx {
                w_x: ps.push("convlstm.w_x", &[4 * f, 1, shape.kernel]),
                w_h: ps.push("convlstm.w_h", &[4 * f, f, shape.kernel]),
                b: ps.push("convlstm.b", &[4 * f]),
            };
            Layout::ConvLstm {
                cell,
                head: push_head(&mut ps, f * shape.len),
                shape,
            }
        }
    };
    (layout, ps)
}

/// Disjoint mutable borrows of several tensors.
fn pick<const N: usize>(ps: &mut ParamSet, idx: [usize; N]) -> [&mut [f64]; N] {
    let mut out: [Option<&mut [f64]>; N] = std::array::from_fn(|_| None);
    for (i, t) in ps.tensors_mut().iter_mut().enumerate() {
        if let Some(slot) = idx.iter().position(|&j| j == i) {
            out[slot] = Some(&mut t.data[..]);
        }
    }
    out.map(|s| s.expect("tensor index in range"))
}

enum Cache {
    Vanilla(Vec<LstmStep>),
    Stacked(Vec<LstmStep>, Vec<LstmStep>),
    Bidirectional(Vec<LstmStep>, Vec<LstmStep>),
    CnnLstm {
        subsequences: Vec<Vec<f64>>,
        conv_out: Vec<Vec<Vec<f64>>>,
        argmax: Vec<Vec<Vec<usize>>>,
        steps: Vec<LstmStep>,
    },
    ConvLstm(Vec<ConvLstmStep>),
}

/// A network of one of the five architectures, with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    config: NetworkConfig,
    params: ParamSet,
    layout: Layout,
    scaler: Scaler,
}

impl NetworkModel {
    /// All-zero weights.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let (layout, params) = build_layout(&config);
        Ok(Self {
            config,
            params,
            layout,
            scaler: Scaler::LastValue,
        })
    }

    /// Weights drawn uniformly from `[-0.05, 0.05]` using `config.seed`.
    pub fn initialized(config: NetworkConfig) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed);
        model.params.fill_uniform(&mut rng, INIT_BOUND);
        Ok(model)
    }

    /// Rebuilds a model around stored weights, checking their layout.
    pub fn from_parts(config: NetworkConfig, params: ParamSet, scaler: Scaler) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        if !model.params.same_layout(&params) {
            return Err(Error::ShapeMismatch("stored weights"));
        }
        model.params = params;
        model.scaler = scaler;
        Ok(model)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn scaler(&self) -> Scaler {
        self.scaler
    }

    fn lstm<'a>(&'a self, idx: &LstmIdx) -> LstmWeights<'a> {
        LstmWeights {
            w_x: self.params.get(idx.w_x),
            w_h: self.params.get(idx.w_h),
            b: self.params.get(idx.b),
            input: idx.input,
            hidden: idx.hidden,
        }
    }

    fn convlstm<'a>(&'a self, idx: &ConvLstmIdx, shape: &Shaping) -> ConvLstmWeights<'a> {
        ConvLstmWeights {
            w_x: self.params.get(idx.w_x),
            w_h: self.params.get(idx.w_h),
            b: self.params.get(idx.b),
            channels: 1,
            filters: self.config.n_f,
            kernel: shape.kernel,
        }
    }

    fn head_output(&self, head: &DenseIdx, feature: &[f64]) -> f64 {
        let w = self.params.get(head.w);
        self.params.get(head.b)[0] + w.iter().zip(feature).map(|(a, b)| a * b).sum::<f64>()
    }

    fn check_window(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.config.n_s {
            return Err(Error::WindowLengthMismatch {
                expected: self.config.n_s,
                got: window.len(),
            });
        }
        Ok(())
    }

    /// Forward pass on an already scaled window. Returns the head input
    /// and the cache for backpropagation.
    fn forward_scaled(&self, u: &[f64]) -> (Vec<f64>, Cache) {
        let column: Vec<Vec<f64>> = u.iter().map(|&v| vec![v]).collect();
        match &self.layout {
            Layout::Vanilla { lstm, .. } => {
                let steps = layer_forward(&column, &self.lstm(lstm));
                (
                    steps.last().expect("n_s >= 1").h.clone(),
                    Cache::Vanilla(steps),
                )
            }
            Layout::Stacked { first, second, .. } => {
                let s1 = layer_forward(&column, &self.lstm(first));
                let hs: Vec<Vec<f64>> = s1.iter().map(|s| s.h.clone()).collect();
                let s2 = layer_forward(&hs, &self.lstm(second));
                (
                    s2.last().expect("n_s >= 1").h.clone(),
                    Cache::Stacked(s1, s2),
                )
            }
            Layout::Bidirectional {
                forward, backward, ..
            } => {
                let fwd = layer_forward(&column, &self.lstm(forward));
                let reversed: Vec<Vec<f64>> = column.iter().rev().cloned().collect();
                let bwd = layer_forward(&reversed, &self.lstm(backward));
                let mut feature = fwd.last().expect("n_s >= 1").h.clone();
                feature.extend_from_slice(&bwd.last().expect("n_s >= 1").h);
                (feature, Cache::Bidirectional(fwd, bwd))
            }
            Layout::CnnLstm {
                conv, lstm, shape, ..
            } => {
                let kernels = self.params.get(conv.kernels);
                let biases = self.params.get(conv.biases);
                let mut subsequences = Vec::with_capacity(shape.count);
                let mut conv_out = Vec::with_capacity(shape.count);
                let mut argmax = Vec::with_capacity(shape.count);
                let mut inputs = Vec::with_capacity(shape.count);
                for sub in u.chunks_exact(shape.len) {
                    let rows = conv1d_raw(sub, kernels, biases, shape.kernel);
                    let mut flat = Vec::with_capacity(rows.len() * shape.pooled_len);
                    let mut arg_rows = Vec::with_capacity(rows.len());
                    for row in &rows {
                        let (pooled, arg) = maxpool1d_indexed(row, shape.pool);
                        flat.extend(pooled);
                        arg_rows.push(arg);
                    }
                    subsequences.push(sub.to_vec());
                    conv_out.push(rows);
                    argmax.push(arg_rows);
                    inputs.push(flat);
                }
                let steps = layer_forward(&inputs, &self.lstm(lstm));
                (
                    steps.last().expect("at least one subsequence").h.clone(),
                    Cache::CnnLstm {
                        subsequences,
                        conv_out,
                        argmax,
                        steps,
                    },
                )
            }
            Layout::ConvLstm { cell, shape, .. } => {
                let w = self.convlstm(cell, shape);
                let size = self.config.n_f * shape.len;
                let mut h = vec![0.0; size];
                let mut c = vec![0.0; size];
                let mut steps = Vec::with_capacity(shape.count);
                for frame in u.chunks_exact(shape.len) {
                    let s = convlstm_step(frame, &h, &c, &w);
                    h.clone_from(&s.h);
                    c.clone_from(&s.c);
                    steps.push(s);
                }
                (h, Cache::ConvLstm(steps))
            }
        }
    }

    fn head(&self) -> &DenseIdx {
        match &self.layout {
            Layout::Vanilla { head, .. }
            | Layout::Stacked { head, .. }
            | Layout::Bidirectional { head, .. }
            | Layout::CnnLstm { head, .. }
            | Layout::ConvLstm { head, .. } => head,
        }
    }

    /// Accumulates `dy * d(output)/d(params)` into `grads`.
    fn backward(&self, feature: &[f64], cache: &Cache, dy: f64, grads: &mut ParamSet) {
        let head = *self.head();
        {
            let [gw, gb] = pick(grads, [head.w, head.b]);
            gw.iter_mut().zip(feature).for_each(|(g, f)| *g += dy * f);
            gb[0] += dy;
        }
        let d_feature: Vec<f64> = self.params.get(head.w).iter().map(|w| dy * w).collect();

        let last_only = |n: usize, width: usize, d: &[f64]| {
            let mut dhs = vec![vec![0.0; width]; n];
            dhs[n - 1].copy_from_slice(d);
            dhs
        };

        match (&self.layout, cache) {
            (Layout::Vanilla { lstm, .. }, Cache::Vanilla(steps)) => {
                let dhs = last_only(steps.len(), lstm.hidden, &d_feature);
                self.lstm_backward(lstm, steps, &dhs, grads);
            }
            (Layout::Stacked { first, second, .. }, Cache::Stacked(s1, s2)) => {
                let dhs = last_only(s2.len(), second.hidden, &d_feature);
                let d_mid = self.lstm_backward(second, s2, &dhs, grads);
                self.lstm_backward(first, s1, &d_mid, grads);
            }
            (
                Layout::Bidirectional {
                    forward, backward, ..
                },
                Cache::Bidirectional(fwd, bwd),
            ) => {
                let h = forward.hidden;
                let dhs_f = last_only(fwd.len(), h, &d_feature[..h]);
                self.lstm_backward(forward, fwd, &dhs_f, grads);
                let dhs_b = last_only(bwd.len(), h, &d_feature[h..]);
                self.lstm_backward(backward, bwd, &dhs_b, grads);
            }
            (
                Layout::CnnLstm {
                    conv, lstm, shape, ..
                },
                Cache::CnnLstm {
                    subsequences,
                    conv_out,
                    argmax,
                    steps,
                },
            ) => {
                let dhs = last_only(steps.len(), lstm.hidden, &d_feature);
                let d_inputs = self.lstm_backward(lstm, steps, &dhs, grads);
                let kernels = self.params.get(conv.kernels);
                let [dk, db] = pick(grads, [conv.kernels, conv.biases]);
                for (s, d_flat) in d_inputs.iter().enumerate() {
                    let d_rows: Vec<Vec<f64>> = argmax[s]
                        .iter()
                        .enumerate()
                        .map(|(f, arg)| {
                            let mut row = vec![0.0; shape.conv_len];
                            for (j, &src) in arg.iter().enumerate() {
                                row[src] += d_flat[f * shape.pooled_len + j];
                            }
                            row
                        })
                        .collect();
                    conv1d_backward(
                        &subsequences[s],
                        kernels,
                        shape.kernel,
                        &conv_out[s],
                        &d_rows,
                        dk,
                        db,
                    );
                }
            }
            (Layout::ConvLstm { cell, shape, .. }, Cache::ConvLstm(steps)) => {
                let w = self.convlstm(cell, shape);
                let [gx, gh, gb] = pick(grads, [cell.w_x, cell.w_h, cell.b]);
                let mut g = ConvLstmGrads {
                    w_x: gx,
                    w_h: gh,
                    b: gb,
                };
                convlstm_backward(steps, &d_feature, &w, &mut g);
            }
            _ => unreachable!("cache built by the same layout"),
        }
    }

    fn lstm_backward(
        &self,
        idx: &LstmIdx,
        steps: &[LstmStep],
        dhs: &[Vec<f64>],
        grads: &mut ParamSet,
    ) -> Vec<Vec<f64>> {
        let w = self.lstm(idx);
        let [gx, gh, gb] = pick(grads, [idx.w_x, idx.w_h, idx.b]);
        let mut g = LstmGrads {
            w_x: gx,
            w_h: gh,
            b: gb,
        };
        layer_backward(steps, dhs, &w, &mut g)
    }

    /// Network output on the scaled axis for a raw window.
    pub fn forward_scaled_output(&self, window: &[f64]) -> Result<f64> {
        self.check_window(window)?;
        let factor = self.scaler.factor(window);
        let u: Vec<f64> = window.iter().map(|v| v / factor).collect();
        let (feature, _) = self.forward_scaled(&u);
        Ok(self.head_output(self.head(), &feature))
    }

    /// Head input (final hidden features) for a raw window.
    pub fn features(&self, window: &[f64]) -> Result<Vec<f64>> {
        self.check_window(window)?;
        let factor = self.scaler.factor(window);
        let u: Vec<f64> = window.iter().map(|v| v / factor).collect();
        Ok(self.forward_scaled(&u).0)
    }

    /// Next-value prediction on the raw scale.
    pub fn predict(&self, window: &[f64]) -> Result<f64> {
        Ok(self.forward_scaled_output(window)? * self.scaler.factor(window))
    }

    /// Scaled-space MSE over the first target of each sample and its exact
    /// gradient with respect to every weight.
    pub fn loss_and_gradients(&self, batch: &[WindowSample]) -> Result<(f64, ParamSet)> {
        if batch.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = batch.len() as f64;
        let mut grads = self.params.zeros_like();
        let mut loss = 0.0;
        for sample in batch {
            self.check_window(&sample.inputs)?;
            let target = *sample.targets.first().ok_or(Error::EmptyInput)?;
            let factor = self.scaler.factor(&sample.inputs);
            let u: Vec<f64> = sample.inputs.iter().map(|v| v / factor).collect();
            let (feature, cache) = self.forward_scaled(&u);
            let err = self.head_output(self.head(), &feature) - target / factor;
            loss += err * err;
            self.backward(&feature, &cache, 2.0 * err / n, &mut grads);
        }
        Ok((loss / n, grads))
    }

    /// Scaled-space MSE only.
    pub fn loss(&self, batch: &[WindowSample]) -> Result<f64> {
        let mut preds = Vec::with_capacity(batch.len());
        let mut targets = Vec::with_capacity(batch.len());
        for sample in batch {
            let factor = self.scaler.factor(&sample.inputs);
            preds.push(self.forward_scaled_output(&sample.inputs)?);
            targets.push(*sample.targets.first().ok_or(Error::EmptyInput)? / factor);
        }
        mse_loss(&preds, &targets)
    }
}

impl Forecaster for NetworkModel {
    fn n_s(&self) -> usize {
        self.config.n_s
    }

    fn predict_next(&self, window: &[f64]) -> Result<f64> {
        self.predict(window)
    }
}
