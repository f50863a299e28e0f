//! LSTM cell, bidirectional encoder and backpropagation through time.

use crate::error::{Error, Result};
use crate::linalg::{axpy, sigmoid, Matrix};
use crate::rng::Lcg64;

/// Gate order used for every `[_; 4]` array below.
pub const INPUT_GATE: usize = 0;
pub const FORGET_GATE: usize = 1;
pub const OUTPUT_GATE: usize = 2;
pub const CANDIDATE: usize = 3;

/// Weights of one LSTM direction. `input[k]` is `h × d`, `recurrent[k]` is
/// `h × h`, `bias[k]` has length `h`, for each gate `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input: [Matrix; 4],
    pub recurrent: [Matrix; 4],
    pub bias: [Vec<f64>; 4],
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmParams {
            input: std::array::from_fn(|_| Matrix::zeros(hidden, input_dim)),
            recurrent: std::array::from_fn(|_| Matrix::zeros(hidden, hidden)),
            bias: std::array::from_fn(|_| vec![0.0; hidden]),
        }
    }

    /// Glorot-uniform matrices, zero biases except the forget gate at 1.0.
    /// Draws input matrices then recurrent matrices, gates in order.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut Lcg64) -> Self {
        let mut p = LstmParams::zeros(input_dim, hidden);
        for m in p.input.iter_mut().chain(p.recurrent.iter_mut()) {
            glorot_fill(m, rng);
        }
        p.bias[FORGET_GATE].fill(1.0);
        p
    }

    pub fn input_dim(&self) -> usize {
        self.input[0].cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.input[0].rows()
    }

    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.input
            .iter()
            .chain(&self.recurrent)
            .map(Matrix::as_slice)
            .chain(self.bias.iter().map(Vec::as_slice))
    }

    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.input
            .iter_mut()
            .chain(self.recurrent.iter_mut())
            .map(Matrix::as_mut_slice)
            .chain(self.bias.iter_mut().map(Vec::as_mut_slice))
    }

    fn check(&self, x: usize, h: usize, c: usize) -> Result<()> {
        let (d, hid) = (self.input_dim(), self.hidden_dim());
        if x != d || h != hid || c != hid {
            return Err(Error::Shape(format!(
                "lstm expects x:{d} h:{hid} c:{hid}, got x:{x} h:{h} c:{c}"
            )));
        }
        Ok(())
    }
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_fill(m: &mut Matrix, rng: &mut Lcg64) {
    let fan = (m.rows() + m.cols()) as f64;
    let scale = if fan > 0.0 { (6.0 / fan).sqrt() } else { 0.0 };
    for x in m.as_mut_slice() {
        *x = rng.uniform(scale);
    }
}

/// Everything from one cell step that the backward pass needs.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: [Vec<f64>; 4],
    tanh_c: Vec<f64>,
    pub(crate) c: Vec<f64>,
    pub(crate) h: Vec<f64>,
}

fn step(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &LstmParams) -> StepCache {
    let hid = p.hidden_dim();
    let gates: [Vec<f64>; 4] = std::array::from_fn(|k| {
        let mut a = p.bias[k].clone();
        p.input[k].mul_vec_add(x, &mut a);
        p.recurrent[k].mul_vec_add(h_prev, &mut a);
        if k == CANDIDATE {
            a.iter_mut().for_each(|v| *v = v.tanh());
        } else {
            a.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        a
    });
    let mut c = vec![0.0; hid];
    let mut tanh_c = vec![0.0; hid];
    let mut h = vec![0.0; hid];
    for j in 0..hid {
        c[j] = gates[FORGET_GATE][j] * c_prev[j] + gates[INPUT_GATE][j] * gates[CANDIDATE][j];
        tanh_c[j] = c[j].tanh();
        h[j] = gates[OUTPUT_GATE][j] * tanh_c[j];
    }
    StepCache {
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates,
        tanh_c,
        c,
        h,
    }
}

/// One LSTM step:
///
/// ```text
/// i = σ(Wi·x + Ui·h + bi)    f = σ(Wf·x + Uf·h + bf)
/// o = σ(Wo·x + Uo·h + bo)    g = tanh(Wg·x + Ug·h + bg)
/// c' = f⊙c + i⊙g             h' = o⊙tanh(c')
/// ```
pub fn lstm_step(x: &[f64], h_prev: &[f64], c_prev: &[f64], params: &LstmParams) -> Result<(Vec<f64>, Vec<f64>)> {
    params.check(x.len(), h_prev.len(), c_prev.len())?;
    let s = step(x, h_prev, c_prev, params);
    Ok((s.h, s.c))
}

/// Run over `inputs` in order from zero initial state.
pub(crate) fn run(inputs: &[&[f64]], p: &LstmParams) -> Vec<StepCache> {
    let hid = p.hidden_dim();
    let mut out: Vec<StepCache> = Vec::with_capacity(inputs.len());
    let zero = vec![0.0; hid];
    for x in inputs {
        let (h, c) = match out.last() {
            Some(prev) => (prev.h.as_slice(), prev.c.as_slice()),
            None => (zero.as_slice(), zero.as_slice()),
        };
        let s = step(x, h, c, p);
        out.push(s);
    }
    out
}

/// Backpropagate through a run. `dh[t]` is the loss gradient w.r.t. the
/// output at step `t`. Parameter gradients accumulate into `grads`; input
/// gradients accumulate into `dx[t]`.
pub(crate) fn backprop(
    inputs: &[&[f64]],
    caches: &[StepCache],
    dh: &[Vec<f64>],
    p: &LstmParams,
    grads: &mut LstmParams,
    dx: &mut [Vec<f64>],
) {
    let hid = p.hidden_dim();
    let mut dh_next = vec![0.0; hid];
    let mut dc_next = vec![0.0; hid];
    let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hid]);

    for t in (0..caches.len()).rev() {
        let s = &caches[t];
        let [i, f, o, g] = &s.gates;
        for j in 0..hid {
            let dh_j = dh[t][j] + dh_next[j];
            let d_o = dh_j * s.tanh_c[j];
            let dc = dc_next[j] + dh_j * o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
            let d_i = dc * g[j];
            let d_g = dc * i[j];
            let d_f = dc * s.c_prev[j];
            dc_next[j] = dc * f[j];
            da[INPUT_GATE][j] = d_i * i[j] * (1.0 - i[j]);
            da[FORGET_GATE][j] = d_f * f[j] * (1.0 - f[j]);
            da[OUTPUT_GATE][j] = d_o * o[j] * (1.0 - o[j]);
            da[CANDIDATE][j] = d_g * (1.0 - g[j] * g[j]);
        }
        dh_next.fill(0.0);
        for k in 0..4 {
            grads.input[k].add_outer(&da[k], inputs[t]);
            grads.recurrent[k].add_outer(&da[k], &s.h_prev);
            axpy(1.0, &da[k], &mut grads.bias[k]);
            p.input[k].mul_t_vec_add(&da[k], &mut dx[t]);
            p.recurrent[k].mul_t_vec_add(&da[k], &mut dh_next);
        }
    }
}

/// Encode an `L × d` sequence into `L × 2h`: row `t` is the forward state at
/// `t` followed by the backward state at `t` (backward pass runs over the
/// reversed sequence, zero initial states).
pub fn bilstm_encode(embedded: &Matrix, forward: &LstmParams, backward: &LstmParams) -> Result<Matrix> {
    let d = embedded.cols();
    for p in [forward, backward] {
        if p.input_dim() != d {
            return Err(Error::Shape(format!("input width {d}, lstm expects {}", p.input_dim())));
        }
    }
    let rows: Vec<&[f64]> = (0..embedded.rows()).map(|t| embedded.row(t)).collect();
    Ok(encode_rows(&rows, forward, backward).0)
}

pub(crate) struct Encoded {
    pub fwd: Vec<StepCache>,
    /// Indexed by reversed position: `bwd[k]` is sentence position `L-1-k`.
    pub bwd: Vec<StepCache>,
}

pub(crate) fn encode_rows(rows: &[&[f64]], forward: &LstmParams, backward: &LstmParams) -> (Matrix, Encoded) {
    let len = rows.len();
    let (hf, hb) = (forward.hidden_dim(), backward.hidden_dim());
    let fwd = run(rows, forward);
    let reversed: Vec<&[f64]> = rows.iter().rev().copied().collect();
    let bwd = run(&reversed, backward);
    let mut out = Matrix::zeros(len, hf + hb);
    for t in 0..len {
        let row = out.row_mut(t);
        row[..hf].copy_from_slice(&fwd[t].h);
        row[hf..].copy_from_slice(&bwd[len - 1 - t].h);
    }
    (out, Encoded { fwd, bwd })
}
