use serde::{Deserialize, Serialize};

use crate::nn::params::{LstmCellParams, StackedModelParams};
use crate::nn::NnError;

/// Numerically stable logistic function; saturates instead of overflowing.
#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Componentwise logistic function. Output is strictly inside (0, 1).
pub fn sigmoid(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(sigmoid_scalar).collect()
}

/// Stable softmax via max subtraction. Components are strictly positive and
/// sum to 1 up to rounding.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    assert!(!logits.is_empty(), "softmax of empty logits");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Working memory `h` and long-term memory `c` of one LSTM layer.
///
/// Every component of `h` stays strictly inside (-1, 1): it is a read gate in
/// (0, 1) times a tanh in (-1, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        LstmState { h: vec![0.0; hidden_dim], c: vec![0.0; hidden_dim] }
    }
}

/// Everything one cell step needs for its backward pass.
///
/// `concat` is `[h_prev, x]`, the vector the gate matrices were applied to.
#[derive(Debug, Clone)]
pub struct CellStepCache {
    pub concat: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub forget: Vec<f64>,
    pub update: Vec<f64>,
    pub read: Vec<f64>,
    pub candidate: Vec<f64>,
    pub cell: Vec<f64>,
    pub cell_tanh: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl CellStepCache {
    pub fn hidden_dim(&self) -> usize {
        self.hidden.len()
    }

    /// The input slice of this step (the tail of `concat`).
    pub fn input(&self) -> &[f64] {
        &self.concat[self.hidden_dim()..]
    }

    pub fn h_prev(&self) -> &[f64] {
        &self.concat[..self.hidden_dim()]
    }
}

/// One timestep of the stacked forward pass: both layer caches plus the
/// readout logits and probabilities.
#[derive(Debug, Clone)]
pub struct StackStepCache {
    pub layers: Vec<CellStepCache>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Full unrolled record of a stacked forward pass, consumed by the backward
/// pass and by inference.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub steps: Vec<StackStepCache>,
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub num_bins: usize,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Readout distribution at step `t`.
    pub fn probs(&self, t: usize) -> &[f64] {
        &self.steps[t].probs
    }
}

/// One LSTM cell step.
///
/// With gates `f = sigma(w_f [h,x] + b_f)`, `u = sigma(w_u [h,x] + b_u)`,
/// `r = sigma(w_r [h,x] + b_r)` and candidate `g = tanh(w_c [h,x] + b_c)`:
/// `c_next = f .* c_prev + u .* g` and `h_next = r .* tanh(c_next)`.
pub fn lstm_cell_forward(
    params: &LstmCellParams,
    x: &[f64],
    prev: &LstmState,
) -> Result<(LstmState, CellStepCache), NnError> {
    let hidden = params.hidden_dim();
    let input = params.input_dim();
    if x.len() != input {
        return Err(NnError::DimMismatch { tensor: "input x", expected: input, got: x.len() });
    }
    if prev.h.len() != hidden {
        return Err(NnError::DimMismatch { tensor: "state h", expected: hidden, got: prev.h.len() });
    }
    if prev.c.len() != hidden {
        return Err(NnError::DimMismatch { tensor: "state c", expected: hidden, got: prev.c.len() });
    }

    let mut concat = Vec::with_capacity(hidden + input);
    concat.extend_from_slice(&prev.h);
    concat.extend_from_slice(x);

    let gate = |w: &crate::linalg::Matrix, b: &[f64]| -> Vec<f64> {
        let mut z = w.matvec(&concat);
        for (zi, bi) in z.iter_mut().zip(b) {
            *zi = sigmoid_scalar(*zi + bi);
        }
        z
    };
    let forget = gate(&params.w_f, &params.b_f);
    let update = gate(&params.w_u, &params.b_u);
    let read = gate(&params.w_r, &params.b_r);

    let mut candidate = params.w_c.matvec(&concat);
    for (ci, bi) in candidate.iter_mut().zip(&params.b_c) {
        *ci = (*ci + bi).tanh();
    }

    let mut cell = vec![0.0; hidden];
    let mut cell_tanh = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    for i in 0..hidden {
        cell[i] = forget[i] * prev.c[i] + update[i] * candidate[i];
        cell_tanh[i] = cell[i].tanh();
        h[i] = read[i] * cell_tanh[i];
    }

    let next = LstmState { h: h.clone(), c: cell.clone() };
    let cache = CellStepCache {
        concat,
        c_prev: prev.c.clone(),
        forget,
        update,
        read,
        candidate,
        cell,
        cell_tanh,
        hidden: h,
    };
    Ok((next, cache))
}

/// Unrolls the two-layer stack over a feature sequence from zero initial
/// states. Layer 1's working memory feeds layer 2; the readout maps layer 2's
/// working memory to a bin distribution at every step.
pub fn stacked_forward(
    model: &StackedModelParams,
    seq: &[Vec<f64>],
) -> Result<ForwardCache, NnError> {
    if seq.is_empty() {
        return Err(NnError::EmptySequence);
    }
    let input_dim = model.input_dim();
    let mut states: Vec<LstmState> = model
        .layers
        .iter()
        .map(|l| LstmState::zeros(l.hidden_dim()))
        .collect();

    let mut steps = Vec::with_capacity(seq.len());
    for x in seq {
        let mut layer_caches = Vec::with_capacity(model.layers.len());
        let mut layer_input = x.clone();
        for (layer, state) in model.layers.iter().zip(states.iter_mut()) {
            let (next, cache) = lstm_cell_forward(layer, &layer_input, state)?;
            layer_input = next.h.clone();
            *state = next;
            layer_caches.push(cache);
        }
        let logits = match &model.readout {
            Some(r) => {
                let mut z = r.w.matvec(&layer_input);
                for (zi, bi) in z.iter_mut().zip(&r.b) {
                    *zi += bi;
                }
                z
            }
            None => layer_input.clone(),
        };
        let probs = softmax(&logits);
        steps.push(StackStepCache { layers: layer_caches, logits, probs });
    }

    Ok(ForwardCache {
        steps,
        input_dim,
        hidden_dims: model.hidden_dims(),
        num_bins: model.num_bins(),
    })
}
