//! Long short-term memory cell unrolled over a sequence, with full
//! backpropagation through time, and the bidirectional wrapper.
//!
//! Gate blocks are stacked `[input, forget, candidate, output]` along the
//! `4H` axis of every parameter array. One bias vector per gate block, no
//! peepholes:
//!
//! ```text
//! z_t = W_ih x_t + W_hh h_{t-1} + b
//! i, f, o = σ(z_i), σ(z_f), σ(z_o);  g = tanh(z_g)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```

use super::activation::sigmoid_scalar;
use super::dense::{axpy, matvec};
use super::{NnError, Tensor};

#[derive(Clone, Copy)]
pub struct LstmParams<'a> {
    /// `(4H, d)`
    pub w_ih: &'a [f64],
    /// `(4H, H)`
    pub w_hh: &'a [f64],
    /// `(4H)`
    pub bias: &'a [f64],
}

pub struct LstmGrads<'a> {
    pub w_ih: &'a mut [f64],
    pub w_hh: &'a mut [f64],
    pub bias: &'a mut [f64],
}

/// Everything the backward pass needs from one forward unroll.
#[derive(Clone, Debug)]
pub struct LstmCache {
    steps: usize,
    input_dim: usize,
    hidden: usize,
    inputs: Vec<f64>,
    /// Post-activation gates, `(T, 4H)`.
    gates: Vec<f64>,
    cells: Vec<f64>,
    tanh_cells: Vec<f64>,
    hiddens: Vec<f64>,
    h0: Vec<f64>,
    c0: Vec<f64>,
}

/// Trainable parameter count of one direction: `4H(d + H + 1)`.
pub fn lstm_param_count(input_dim: usize, hidden: usize) -> usize {
    4 * hidden * (input_dim + hidden + 1)
}

fn check_params(params: &LstmParams<'_>, d: usize, h: usize) -> Result<(), NnError> {
    let checks = [
        (params.w_ih.len(), vec![4 * h, d]),
        (params.w_hh.len(), vec![4 * h, h]),
        (params.bias.len(), vec![4 * h]),
    ];
    for (len, shape) in checks {
        if len != shape.iter().product::<usize>() {
            return Err(NnError::ShapeMismatch {
                expected: shape,
                found: vec![len],
            });
        }
    }
    Ok(())
}

/// Runs the cell from zero initial state; returns every hidden state `(T, H)`.
pub fn lstm_forward(x: &Tensor, hidden: usize, params: LstmParams<'_>) -> Result<(Tensor, LstmCache), NnError> {
    let zeros = vec![0.0; hidden];
    lstm_forward_with_state(x, hidden, params, &zeros, &zeros)
}

/// Same as [`lstm_forward`] with caller-provided `h0`, `c0`.
pub fn lstm_forward_with_state(
    x: &Tensor,
    hidden: usize,
    params: LstmParams<'_>,
    h0: &[f64],
    c0: &[f64],
) -> Result<(Tensor, LstmCache), NnError> {
    let (steps, d) = x.as_sequence();
    check_params(&params, d, hidden)?;
    if h0.len() != hidden || c0.len() != hidden {
        return Err(NnError::ShapeMismatch {
            expected: vec![hidden],
            found: vec![h0.len(), c0.len()],
        });
    }
    let h4 = 4 * hidden;
    let mut gates = vec![0.0; steps * h4];
    let mut cells = vec![0.0; steps * hidden];
    let mut tanh_cells = vec![0.0; steps * hidden];
    let mut hiddens = vec![0.0; steps * hidden];
    let mut z = vec![0.0; h4];
    let mut zx = vec![0.0; h4];
    let mut zh = vec![0.0; h4];

    for t in 0..steps {
        let xt = &x.data()[t * d..(t + 1) * d];
        let (h_prev, c_prev) = if t == 0 {
            (h0, c0)
        } else {
            (
                &hiddens[(t - 1) * hidden..t * hidden],
                &cells[(t - 1) * hidden..t * hidden],
            )
        };
        matvec(params.w_ih, xt, &mut zx);
        matvec(params.w_hh, h_prev, &mut zh);
        for r in 0..h4 {
            z[r] = params.bias[r] + zx[r] + zh[r];
        }
        let gt = &mut gates[t * h4..(t + 1) * h4];
        for j in 0..hidden {
            gt[j] = sigmoid_scalar(z[j]);
            gt[hidden + j] = sigmoid_scalar(z[hidden + j]);
            gt[2 * hidden + j] = z[2 * hidden + j].tanh();
            gt[3 * hidden + j] = sigmoid_scalar(z[3 * hidden + j]);
        }
        let mut c_new = vec![0.0; hidden];
        for j in 0..hidden {
            c_new[j] = gt[hidden + j] * c_prev[j] + gt[j] * gt[2 * hidden + j];
        }
        for j in 0..hidden {
            let tc = c_new[j].tanh();
            tanh_cells[t * hidden + j] = tc;
            hiddens[t * hidden + j] = gt[3 * hidden + j] * tc;
        }
        cells[t * hidden..(t + 1) * hidden].copy_from_slice(&c_new);
    }

    let out = Tensor::matrix(steps, hidden, hiddens.clone())?;
    let cache = LstmCache {
        steps,
        input_dim: d,
        hidden,
        inputs: x.data().to_vec(),
        gates,
        cells,
        tanh_cells,
        hiddens,
        h0: h0.to_vec(),
        c0: c0.to_vec(),
    };
    Ok((out, cache))
}

/// Backpropagation through all `T` steps. `grad_out` is `dL/dh_t` for every
/// step, `(T, H)`; parameter gradients accumulate into `grads`.
pub fn lstm_backward(
    cache: &LstmCache,
    params: LstmParams<'_>,
    grad_out: &Tensor,
    grads: LstmGrads<'_>,
) -> Result<Tensor, NnError> {
    let (steps, d, hidden) = (cache.steps, cache.input_dim, cache.hidden);
    check_params(&params, d, hidden)?;
    if grad_out.len() != steps * hidden {
        return Err(NnError::ShapeMismatch {
            expected: vec![steps, hidden],
            found: grad_out.shape().to_vec(),
        });
    }
    let h4 = 4 * hidden;
    let mut dx = vec![0.0; steps * d];
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let mut dz = vec![0.0; h4];

    for t in (0..steps).rev() {
        let gt = &cache.gates[t * h4..(t + 1) * h4];
        let (h_prev, c_prev) = if t == 0 {
            (cache.h0.as_slice(), cache.c0.as_slice())
        } else {
            (
                &cache.hiddens[(t - 1) * hidden..t * hidden],
                &cache.cells[(t - 1) * hidden..t * hidden],
            )
        };
        let go = &grad_out.data()[t * hidden..(t + 1) * hidden];
        for j in 0..hidden {
            let (i, f, g, o) = (gt[j], gt[hidden + j], gt[2 * hidden + j], gt[3 * hidden + j]);
            let tc = cache.tanh_cells[t * hidden + j];
            let dh = go[j] + dh_next[j];
            let d_o = dh * tc;
            let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
            dz[j] = dc * g * i * (1.0 - i);
            dz[hidden + j] = dc * c_prev[j] * f * (1.0 - f);
            dz[2 * hidden + j] = dc * i * (1.0 - g * g);
            dz[3 * hidden + j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        let xt = &cache.inputs[t * d..(t + 1) * d];
        let dxt = &mut dx[t * d..(t + 1) * d];
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for (r, &dzr) in dz.iter().enumerate() {
            grads.bias[r] += dzr;
            if dzr == 0.0 {
                continue;
            }
            axpy(dzr, xt, &mut grads.w_ih[r * d..(r + 1) * d]);
            axpy(dzr, h_prev, &mut grads.w_hh[r * hidden..(r + 1) * hidden]);
            axpy(dzr, &params.w_ih[r * d..(r + 1) * d], dxt);
            axpy(dzr, &params.w_hh[r * hidden..(r + 1) * hidden], &mut dh_next);
        }
    }
    Tensor::matrix(steps, d, dx)
}

#[derive(Clone, Debug)]
pub struct BiLstmCache {
    forward: LstmCache,
    backward: LstmCache,
}

fn reverse_steps(x: &Tensor) -> Tensor {
    let (steps, width) = x.as_sequence();
    let mut data = Vec::with_capacity(x.len());
    for t in (0..steps).rev() {
        data.extend_from_slice(&x.data()[t * width..(t + 1) * width]);
    }
    Tensor::matrix(steps, width, data).expect("same element count")
}

/// Output step `t` is `[h_fwd(t), h_bwd(T-1-t)]` where the backward direction
/// runs over the reversed input, so both halves refer to input position `t`.
pub fn bilstm_forward(
    x: &Tensor,
    hidden: usize,
    fwd: LstmParams<'_>,
    bwd: LstmParams<'_>,
) -> Result<(Tensor, BiLstmCache), NnError> {
    let (hf, cf) = lstm_forward(x, hidden, fwd)?;
    let (hb, cb) = lstm_forward(&reverse_steps(x), hidden, bwd)?;
    let steps = cf.steps;
    let mut out = Vec::with_capacity(steps * 2 * hidden);
    for t in 0..steps {
        out.extend_from_slice(hf.row(t));
        out.extend_from_slice(hb.row(steps - 1 - t));
    }
    Ok((
        Tensor::matrix(steps, 2 * hidden, out)?,
        BiLstmCache {
            forward: cf,
            backward: cb,
        },
    ))
}

pub fn bilstm_backward(
    cache: &BiLstmCache,
    fwd: LstmParams<'_>,
    bwd: LstmParams<'_>,
    grad_out: &Tensor,
    grads_fwd: LstmGrads<'_>,
    grads_bwd: LstmGrads<'_>,
) -> Result<Tensor, NnError> {
    let steps = cache.forward.steps;
    let hidden = cache.forward.hidden;
    if grad_out.len() != steps * 2 * hidden {
        return Err(NnError::ShapeMismatch {
            expected: vec![steps, 2 * hidden],
            found: grad_out.shape().to_vec(),
        });
    }
    let mut gf = Vec::with_capacity(steps * hidden);
    let mut gb = vec![0.0; steps * hidden];
    for t in 0..steps {
        let row = &grad_out.data()[t * 2 * hidden..(t + 1) * 2 * hidden];
        gf.extend_from_slice(&row[..hidden]);
        let rt = steps - 1 - t;
        gb[rt * hidden..(rt + 1) * hidden].copy_from_slice(&row[hidden..]);
    }
    let dx_f = lstm_backward(&cache.forward, fwd, &Tensor::matrix(steps, hidden, gf)?, grads_fwd)?;
    let dx_b = lstm_backward(&cache.backward, bwd, &Tensor::matrix(steps, hidden, gb)?, grads_bwd)?;
    let dx_b = reverse_steps(&dx_b);
    let data = dx_f.data().iter().zip(dx_b.data()).map(|(a, b)| a + b).collect();
    Tensor::matrix(steps, cache.forward.input_dim, data)
}
