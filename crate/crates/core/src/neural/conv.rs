//! 1-D convolution, max pooling, and the convolutional LSTM cell.

use super::lstm::{gate_backward, gate_update};
use crate::error::{Error, Result};

/// Valid (unpadded) single-channel convolution with ReLU.
///
/// `kernels` is `filters x kernel_size`; returns one feature row per
/// filter, each of length `x.len() - kernel_size + 1`.
pub fn conv1d_forward(
    x: &[f64],
    kernels: &[f64],
    biases: &[f64],
    kernel_size: usize,
) -> Result<Vec<Vec<f64>>> {
    if kernel_size == 0 || kernels.len() != biases.len() * kernel_size {
        return Err(Error::ShapeMismatch("conv1d kernels"));
    }
    if x.len() < kernel_size {
        return Err(Error::KernelTooWide {
            kernel: kernel_size,
            len: x.len(),
        });
    }
    Ok(conv1d_raw(x, kernels, biases, kernel_size))
}

pub(crate) fn conv1d_raw(
    x: &[f64],
    kernels: &[f64],
    biases: &[f64],
    kernel_size: usize,
) -> Vec<Vec<f64>> {
    let out_len = x.len() + 1 - kernel_size;
    kernels
        .chunks_exact(kernel_size)
        .zip(biases)
        .map(|(kernel, &b)| {
            (0..out_len)
                .map(|s| {
                    let z = b + kernel.iter().zip(&x[s..]).map(|(k, v)| k * v).sum::<f64>();
                    z.max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Backward of [`conv1d_raw`] given its output and the output gradient.
/// Accumulates into `d_kernels` and `d_biases`.
pub(crate) fn conv1d_backward(
    x: &[f64],
    kernels: &[f64],
    kernel_size: usize,
    out: &[Vec<f64>],
    d_out: &[Vec<f64>],
    d_kernels: &mut [f64],
    d_biases: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; x.len()];
    for (f, (row, drow)) in out.iter().zip(d_out).enumerate() {
        let kernel = &kernels[f * kernel_size..(f + 1) * kernel_size];
        let dk = &mut d_kernels[f * kernel_size..(f + 1) * kernel_size];
        for (s, (&y, &dy)) in row.iter().zip(drow).enumerate() {
            if y <= 0.0 || dy == 0.0 {
                continue;
            }
            d_biases[f] += dy;
            for t in 0..kernel_size {
                dk[t] += dy * x[s + t];
                dx[s + t] += dy * kernel[t];
            }
        }
    }
    dx
}

/// Non-overlapping max pooling; a trailing partial window is pooled on its
/// own.
pub fn maxpool1d(x: &[f64], pool_size: usize) -> Vec<f64> {
    maxpool1d_indexed(x, pool_size).0
}

/// Pooled values and the source index of each (first maximum on ties).
pub(crate) fn maxpool1d_indexed(x: &[f64], pool_size: usize) -> (Vec<f64>, Vec<usize>) {
    let pool = pool_size.max(1);
    x.chunks(pool)
        .enumerate()
        .map(|(w, chunk)| {
            let (arg, &val) = chunk.iter().enumerate().fold((0, &chunk[0]), |best, cur| {
                if *cur.1 > *best.1 {
                    cur
                } else {
                    best
                }
            });
            (val, w * pool + arg)
        })
        .unzip()
}

/// Borrowed weights of a convolutional LSTM cell.
///
/// Frames are `channels x width`; state is `filters x width`. `w_x` is
/// `4F x C x K`, `w_h` is `4F x F x K`, `b` is `4F`, with the same gate
/// order as the dense cell. Convolutions are same-padded so the state
/// width never changes.
#[derive(Debug, Clone, Copy)]
pub struct ConvLstmWeights<'a> {
    pub w_x: &'a [f64],
    pub w_h: &'a [f64],
    pub b: &'a [f64],
    pub channels: usize,
    pub filters: usize,
    pub kernel: usize,
}

impl ConvLstmWeights<'_> {
    fn check(&self) -> Result<()> {
        let (c, f, k) = (self.channels, self.filters, self.kernel);
        if k == 0
            || self.w_x.len() != 4 * f * c * k
            || self.w_h.len() != 4 * f * f * k
            || self.b.len() != 4 * f
        {
            return Err(Error::ShapeMismatch("convlstm weights"));
        }
        Ok(())
    }
}

pub(crate) struct ConvLstmGrads<'a> {
    pub w_x: &'a mut [f64],
    pub w_h: &'a mut [f64],
    pub b: &'a mut [f64],
}

/// `out (R x L) += conv(input (C x L), w (R x C x K))`, same padding.
fn same_conv_acc(input: &[f64], channels: usize, w: &[f64], kernel: usize, out: &mut [f64]) {
    let width = input.len() / channels;
    let rows = out.len() / width;
    let pad = (kernel - 1) / 2;
    for r in 0..rows {
        for c in 0..channels {
            let taps = &w[(r * channels + c) * kernel..(r * channels + c + 1) * kernel];
            let src = &input[c * width..(c + 1) * width];
            let dst = &mut out[r * width..(r + 1) * width];
            for (tau, &k) in taps.iter().enumerate() {
                if k == 0.0 {
                    continue;
                }
                for (s, o) in dst.iter_mut().enumerate() {
                    let j = s + tau;
                    if j >= pad && j - pad < width {
                        *o += k * src[j - pad];
                    }
                }
            }
        }
    }
}

/// Backward of [`same_conv_acc`]: accumulates `dw` and `d_input`.
fn same_conv_backward(
    input: &[f64],
    channels: usize,
    w: &[f64],
    kernel: usize,
    d_out: &[f64],
    dw: &mut [f64],
    d_input: &mut [f64],
) {
    let width = input.len() / channels;
    let rows = d_out.len() / width;
    let pad = (kernel - 1) / 2;
    for r in 0..rows {
        let drow = &d_out[r * width..(r + 1) * width];
        for c in 0..channels {
            let base = (r * channels + c) * kernel;
            for tau in 0..kernel {
                let k = w[base + tau];
                let mut acc = 0.0;
                for (s, &dz) in drow.iter().enumerate() {
                    let j = s + tau;
                    if j >= pad && j - pad < width {
                        acc += dz * input[c * width + j - pad];
                        d_input[c * width + j - pad] += dz * k;
                    }
                }
                dw[base + tau] += acc;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ConvLstmStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub gates: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

pub(crate) fn convlstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w: &ConvLstmWeights,
) -> ConvLstmStep {
    let width = x.len() / w.channels;
    let mut z = vec![0.0; 4 * w.filters * width];
    for (row, &b) in z.chunks_exact_mut(width).zip(w.b) {
        row.fill(b);
    }
    same_conv_acc(x, w.channels, w.w_x, w.kernel, &mut z);
    same_conv_acc(h_prev, w.filters, w.w_h, w.kernel, &mut z);
    let (gates, c, tanh_c, h) = gate_update(&z, c_prev);
    ConvLstmStep {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates,
        tanh_c,
        h,
        c,
    }
}

/// One convolutional LSTM step on a `channels x width` frame.
pub fn convlstm_cell_forward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    weights: &ConvLstmWeights,
) -> Result<(Vec<f64>, Vec<f64>)> {
    weights.check()?;
    if x.is_empty() || !x.len().is_multiple_of(weights.channels) {
        return Err(Error::ShapeMismatch("convlstm frame"));
    }
    let width = x.len() / weights.channels;
    if h_prev.len() != weights.filters * width || c_prev.len() != h_prev.len() {
        return Err(Error::ShapeMismatch("convlstm state"));
    }
    let s = convlstm_step(x, h_prev, c_prev, weights);
    Ok((s.h, s.c))
}

/// BPTT through a sequence of ConvLSTM steps where only the final hidden
/// state receives an external gradient.
pub(crate) fn convlstm_backward(
    steps: &[ConvLstmStep],
    dh_last: &[f64],
    w: &ConvLstmWeights,
    g: &mut ConvLstmGrads,
) {
    let width = steps[0].x.len() / w.channels;
    let mut dh = dh_last.to_vec();
    let mut dc_next = vec![0.0; dh.len()];
    for s in steps.iter().rev() {
        let (dz, dc_prev) = gate_backward(&s.gates, &s.c_prev, &s.tanh_c, &dh, &dc_next);
        for (db, row) in g.b.iter_mut().zip(dz.chunks_exact(width)) {
            *db += row.iter().sum::<f64>();
        }
        let mut dx = vec![0.0; s.x.len()];
        same_conv_backward(&s.x, w.channels, w.w_x, w.kernel, &dz, g.w_x, &mut dx);
        let mut dh_prev = vec![0.0; s.h_prev.len()];
        same_conv_backward(
            &s.h_prev,
            w.filters,
            w.w_h,
            w.kernel,
            &dz,
            g.w_h,
            &mut dh_prev,
        );
        dh = dh_prev;
        dc_next = dc_prev;
    }
}
