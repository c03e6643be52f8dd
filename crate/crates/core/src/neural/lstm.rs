//! Dense LSTM cell and layer.
//!
//! Gate blocks are stacked as `[input, forget, candidate, output]`, each of
//! `hidden` rows: `w_x` is `4H x D`, `w_h` is `4H x H`, `b` is `4H`.

use crate::error::{Error, Result};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Borrowed weights of one LSTM layer.
#[derive(Debug, Clone, Copy)]
pub struct LstmWeights<'a> {
    pub w_x: &'a [f64],
    pub w_h: &'a [f64],
    pub b: &'a [f64],
    pub input: usize,
    pub hidden: usize,
}

impl LstmWeights<'_> {
    fn check(&self) -> Result<()> {
        let (d, h) = (self.input, self.hidden);
        if self.w_x.len() != 4 * h * d || self.w_h.len() != 4 * h * h || self.b.len() != 4 * h {
            return Err(Error::ShapeMismatch("lstm weights"));
        }
        Ok(())
    }
}

/// Mutable gradient buffers matching [`LstmWeights`].
pub(crate) struct LstmGrads<'a> {
    pub w_x: &'a mut [f64],
    pub w_h: &'a mut [f64],
    pub b: &'a mut [f64],
}

/// Everything the backward pass needs from one time step.
#[derive(Debug, Clone)]
pub(crate) struct LstmStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Activated gates `[i, f, g, o]`, length `4H`.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// `out[r] += sum_c m[r, c] * v[c]` for a row-major `rows x v.len()` matrix.
pub(crate) fn matvec_acc(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out[c] += sum_r m[r, c] * v[r]`.
pub(crate) fn matvec_t_acc(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (row, &scale) in m.chunks_exact(cols).zip(v) {
        if scale != 0.0 {
            out.iter_mut().zip(row).for_each(|(o, w)| *o += w * scale);
        }
    }
}

/// `m[r, c] += u[r] * v[c]`.
pub(crate) fn outer_acc(m: &mut [f64], u: &[f64], v: &[f64]) {
    let cols = v.len();
    for (row, &scale) in m.chunks_exact_mut(cols).zip(u) {
        if scale != 0.0 {
            row.iter_mut().zip(v).for_each(|(o, x)| *o += x * scale);
        }
    }
}

/// Applies gate activations to pre-activations `z` (length `4H`) and
/// returns the step state.
pub(crate) fn gate_update(z: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = c_prev.len();
    let mut gates = vec![0.0; 4 * h];
    for k in 0..h {
        gates[k] = sigmoid(z[k]);
        gates[h + k] = sigmoid(z[h + k]);
        gates[2 * h + k] = z[2 * h + k].tanh();
        gates[3 * h + k] = sigmoid(z[3 * h + k]);
    }
    let c: Vec<f64> = (0..h)
        .map(|k| gates[h + k] * c_prev[k] + gates[k] * gates[2 * h + k])
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let out: Vec<f64> = (0..h).map(|k| gates[3 * h + k] * tanh_c[k]).collect();
    (gates, c, tanh_c, out)
}

/// Gradient of the pre-activations given `dh` and `dc` flowing into the
/// step; returns `(dz, dc_prev)`.
pub(crate) fn gate_backward(
    gates: &[f64],
    c_prev: &[f64],
    tanh_c: &[f64],
    dh: &[f64],
    dc_next: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let h = c_prev.len();
    let mut dz = vec![0.0; 4 * h];
    let mut dc_prev = vec![0.0; h];
    for k in 0..h {
        let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
        let dc = dh[k] * o * (1.0 - tanh_c[k] * tanh_c[k]) + dc_next[k];
        dz[k] = dc * g * i * (1.0 - i);
        dz[h + k] = dc * c_prev[k] * f * (1.0 - f);
        dz[2 * h + k] = dc * i * (1.0 - g * g);
        dz[3 * h + k] = dh[k] * tanh_c[k] * o * (1.0 - o);
        dc_prev[k] = dc * f;
    }
    (dz, dc_prev)
}

pub(crate) fn step_forward(x: &[f64], h_prev: &[f64], c_prev: &[f64], w: &LstmWeights) -> LstmStep {
    let mut z = w.b.to_vec();
    matvec_acc(w.w_x, x, &mut z);
    matvec_acc(w.w_h, h_prev, &mut z);
    let (gates, c, tanh_c, h) = gate_update(&z, c_prev);
    LstmStep {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates,
        c,
        tanh_c,
        h,
    }
}

/// One LSTM step: returns the new `(h, c)`.
pub fn lstm_cell_forward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    weights: &LstmWeights,
) -> Result<(Vec<f64>, Vec<f64>)> {
    weights.check()?;
    if x.len() != weights.input || h_prev.len() != weights.hidden || c_prev.len() != weights.hidden
    {
        return Err(Error::ShapeMismatch("lstm cell state"));
    }
    let step = step_forward(x, h_prev, c_prev, weights);
    Ok((step.h, step.c))
}

/// Runs a layer over `xs` from zero state, returning every step.
pub(crate) fn layer_forward(xs: &[Vec<f64>], w: &LstmWeights) -> Vec<LstmStep> {
    let mut h = vec![0.0; w.hidden];
    let mut c = vec![0.0; w.hidden];
    let mut steps = Vec::with_capacity(xs.len());
    for x in xs {
        let step = step_forward(x, &h, &c, w);
        h.clone_from(&step.h);
        c.clone_from(&step.c);
        steps.push(step);
    }
    steps
}

/// Backpropagation through time. `dhs[t]` is the external gradient on the
/// hidden output of step `t`. Accumulates parameter gradients and returns
/// the gradient on each input.
pub(crate) fn layer_backward(
    steps: &[LstmStep],
    dhs: &[Vec<f64>],
    w: &LstmWeights,
    g: &mut LstmGrads,
) -> Vec<Vec<f64>> {
    let hidden = w.hidden;
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let mut dxs = vec![Vec::new(); steps.len()];
    for t in (0..steps.len()).rev() {
        let s = &steps[t];
        let dh: Vec<f64> = dhs[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        let (dz, dc_prev) = gate_backward(&s.gates, &s.c_prev, &s.tanh_c, &dh, &dc_next);
        outer_acc(g.w_x, &dz, &s.x);
        outer_acc(g.w_h, &dz, &s.h_prev);
        g.b.iter_mut().zip(&dz).for_each(|(b, d)| *b += d);
        let mut dx = vec![0.0; w.input];
        matvec_t_acc(w.w_x, &dz, &mut dx);
        let mut dh_prev = vec![0.0; hidden];
        matvec_t_acc(w.w_h, &dz, &mut dh_prev);
        dxs[t] = dx;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    dxs
}
