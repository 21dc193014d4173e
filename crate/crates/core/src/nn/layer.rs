use std::fmt;

use rand::Rng;

use super::activation::{relu, relu_backward, sigmoid, sigmoid_backward};
use super::conv::{conv1d_backward, conv1d_forward, conv1d_param_count, ConvCache, Padding};
use super::dense::{dense_backward, dense_forward};
use super::dropout::{dropout, dropout_backward, Mode};
use super::lstm::{
    bilstm_backward, bilstm_forward, lstm_backward, lstm_forward, lstm_param_count, BiLstmCache, LstmCache,
    LstmGrads, LstmParams,
};
use super::pool::{global_avg_pool, global_avg_pool_backward, maxpool1d, maxpool1d_backward, MaxPoolCache};
use super::{NnError, Tensor};

/// Closed set of layer kinds with their hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    Dense { input: usize, output: usize, bias: bool },
    Relu,
    Sigmoid,
    Lstm { input: usize, hidden: usize, return_sequences: bool },
    BiLstm { input: usize, hidden: usize, return_sequences: bool },
    Conv1d { in_channels: usize, out_channels: usize, kernel_size: usize, padding: Padding },
    MaxPool1d { pool_size: usize },
    GlobalAvgPool1d,
    Dropout { rate: f64 },
    /// `(T, C)` to `(C·T, 1)`: each channel's series laid end to end.
    ChannelSeries,
}

/// Role of a named parameter array inside its layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamRole {
    Weight,
    Bias,
    InputHidden,
    HiddenHidden,
    GateBias,
    ReverseInputHidden,
    ReverseHiddenHidden,
    ReverseGateBias,
    Kernel,
}

impl ParamRole {
    pub const ALL: [ParamRole; 9] = [
        ParamRole::Weight,
        ParamRole::Bias,
        ParamRole::InputHidden,
        ParamRole::HiddenHidden,
        ParamRole::GateBias,
        ParamRole::ReverseInputHidden,
        ParamRole::ReverseHiddenHidden,
        ParamRole::ReverseGateBias,
        ParamRole::Kernel,
    ];

    pub fn tag(self) -> u8 {
        ParamRole::ALL.iter().position(|&r| r == self).expect("listed") as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        ParamRole::ALL.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamRole::Weight => "weight",
            ParamRole::Bias => "bias",
            ParamRole::InputHidden => "w_ih",
            ParamRole::HiddenHidden => "w_hh",
            ParamRole::GateBias => "b",
            ParamRole::ReverseInputHidden => "rev_w_ih",
            ParamRole::ReverseHiddenHidden => "rev_w_hh",
            ParamRole::ReverseGateBias => "rev_b",
            ParamRole::Kernel => "kernel",
        }
    }
}

impl fmt::Display for ParamRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Relu => "relu",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::Lstm { .. } => "lstm",
            LayerSpec::BiLstm { .. } => "bilstm",
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::MaxPool1d { .. } => "maxpool1d",
            LayerSpec::GlobalAvgPool1d => "gap1d",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::ChannelSeries => "channel_series",
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let sizes: &[usize] = match self {
            LayerSpec::Dense { input, output, .. } => &[*input, *output],
            LayerSpec::Lstm { input, hidden, .. } | LayerSpec::BiLstm { input, hidden, .. } => &[*input, *hidden],
            LayerSpec::Conv1d { in_channels, out_channels, kernel_size, .. } => {
                &[*in_channels, *out_channels, *kernel_size]
            }
            LayerSpec::MaxPool1d { pool_size } => &[*pool_size],
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(rate) {
                    return Err(NnError::InvalidSpec(format!("dropout rate {rate} outside [0, 1)")));
                }
                &[]
            }
            _ => &[],
        };
        if sizes.contains(&0) {
            return Err(NnError::InvalidSpec(format!("{} has a zero size hyperparameter", self.kind())));
        }
        Ok(())
    }

    /// Shapes of the trainable arrays, in storage order.
    pub fn param_shapes(&self) -> Vec<(ParamRole, Vec<usize>)> {
        match *self {
            LayerSpec::Dense { input, output, bias } => {
                let mut v = vec![(ParamRole::Weight, vec![output, input])];
                if bias {
                    v.push((ParamRole::Bias, vec![output]));
                }
                v
            }
            LayerSpec::Lstm { input, hidden, .. } => vec![
                (ParamRole::InputHidden, vec![4 * hidden, input]),
                (ParamRole::HiddenHidden, vec![4 * hidden, hidden]),
                (ParamRole::GateBias, vec![4 * hidden]),
            ],
            LayerSpec::BiLstm { input, hidden, .. } => vec![
                (ParamRole::InputHidden, vec![4 * hidden, input]),
                (ParamRole::HiddenHidden, vec![4 * hidden, hidden]),
                (ParamRole::GateBias, vec![4 * hidden]),
                (ParamRole::ReverseInputHidden, vec![4 * hidden, input]),
                (ParamRole::ReverseHiddenHidden, vec![4 * hidden, hidden]),
                (ParamRole::ReverseGateBias, vec![4 * hidden]),
            ],
            LayerSpec::Conv1d { in_channels, out_channels, kernel_size, .. } => vec![
                (ParamRole::Kernel, vec![out_channels, kernel_size, in_channels]),
                (ParamRole::Bias, vec![out_channels]),
            ],
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { input, output, bias } => input * output + if bias { output } else { 0 },
            LayerSpec::Lstm { input, hidden, .. } => lstm_param_count(input, hidden),
            LayerSpec::BiLstm { input, hidden, .. } => 2 * lstm_param_count(input, hidden),
            LayerSpec::Conv1d { in_channels, out_channels, kernel_size, .. } => {
                conv1d_param_count(in_channels, out_channels, kernel_size)
            }
            _ => 0,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let mismatch = |expected: Vec<usize>| NnError::ShapeMismatch {
            expected,
            found: input.to_vec(),
        };
        let as_seq = |channels: usize| -> Result<usize, NnError> {
            match input {
                [len, ch] if *ch == channels => Ok(*len),
                [len] if channels == 1 => Ok(*len),
                _ => Err(mismatch(vec![0, channels])),
            }
        };
        match *self {
            LayerSpec::Dense { input: d, output, .. } => {
                if input.iter().product::<usize>() != d {
                    return Err(mismatch(vec![d]));
                }
                Ok(vec![output])
            }
            LayerSpec::Relu | LayerSpec::Sigmoid | LayerSpec::Dropout { .. } => Ok(input.to_vec()),
            LayerSpec::Lstm { input: d, hidden, return_sequences }
            | LayerSpec::BiLstm { input: d, hidden, return_sequences } => {
                let steps = match input {
                    [t, w] if *w == d => *t,
                    _ => return Err(mismatch(vec![0, d])),
                };
                let width = if matches!(self, LayerSpec::BiLstm { .. }) { 2 * hidden } else { hidden };
                Ok(if return_sequences { vec![steps, width] } else { vec![width] })
            }
            LayerSpec::Conv1d { in_channels, out_channels, kernel_size, padding } => {
                let len = as_seq(in_channels)?;
                let out = padding
                    .output_len(len, kernel_size)
                    .ok_or(NnError::KernelTooLarge { kernel: kernel_size, length: len })?;
                Ok(vec![out, out_channels])
            }
            LayerSpec::MaxPool1d { pool_size } => match input {
                [len, ch] if *len >= pool_size => Ok(vec![len / pool_size, *ch]),
                [len, ..] => Err(NnError::PoolTooLarge { pool: pool_size, length: *len }),
                _ => Err(mismatch(vec![0, 0])),
            },
            LayerSpec::GlobalAvgPool1d => match input {
                [_, ch] => Ok(vec![*ch]),
                _ => Err(mismatch(vec![0, 0])),
            },
            LayerSpec::ChannelSeries => match input {
                [len, ch] => Ok(vec![len * ch, 1]),
                _ => Err(mismatch(vec![0, 0])),
            },
        }
    }
}

/// Sum of per-layer trainable parameter counts.
pub fn model_param_count(specs: &[LayerSpec]) -> usize {
    specs.iter().map(LayerSpec::param_count).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub role: ParamRole,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub params: Vec<Param>,
}

/// Per-layer state recorded by a forward pass.
#[derive(Clone, Debug)]
pub enum LayerCache {
    Dense { input: Tensor },
    Relu { input: Tensor },
    Sigmoid { output: Tensor },
    Lstm { cache: LstmCache, steps: usize },
    BiLstm { cache: BiLstmCache, steps: usize },
    Conv1d { cache: ConvCache },
    MaxPool1d { cache: MaxPoolCache },
    GlobalAvgPool1d { in_len: usize },
    Dropout { mask: Option<Vec<f64>> },
    ChannelSeries { steps: usize, channels: usize },
}

impl Layer {
    pub fn zeroed(spec: LayerSpec) -> Self {
        let params = spec
            .param_shapes()
            .into_iter()
            .map(|(role, shape)| Param {
                values: vec![0.0; shape.iter().product()],
                role,
                shape,
            })
            .collect();
        Layer { spec, params }
    }

    pub fn param(&self, role: ParamRole) -> Option<&Param> {
        self.params.iter().find(|p| p.role == role)
    }

    fn values(&self, role: ParamRole) -> &[f64] {
        &self.param(role).expect("role present for this layer kind").values
    }

    fn index_of(&self, role: ParamRole) -> usize {
        self.params.iter().position(|p| p.role == role).expect("role present")
    }

    fn lstm_params(&self, reverse: bool) -> LstmParams<'_> {
        if reverse {
            LstmParams {
                w_ih: self.values(ParamRole::ReverseInputHidden),
                w_hh: self.values(ParamRole::ReverseHiddenHidden),
                bias: self.values(ParamRole::ReverseGateBias),
            }
        } else {
            LstmParams {
                w_ih: self.values(ParamRole::InputHidden),
                w_hh: self.values(ParamRole::HiddenHidden),
                bias: self.values(ParamRole::GateBias),
            }
        }
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &Tensor, mode: Mode, rng: &mut R) -> Result<(Tensor, LayerCache), NnError> {
        match self.spec {
            LayerSpec::Dense { output, bias, .. } => {
                let b = bias.then(|| self.values(ParamRole::Bias));
                let y = dense_forward(x, self.values(ParamRole::Weight), b, output)?;
                Ok((y, LayerCache::Dense { input: x.clone() }))
            }
            LayerSpec::Relu => Ok((relu(x), LayerCache::Relu { input: x.clone() })),
            LayerSpec::Sigmoid => {
                let y = sigmoid(x);
                Ok((y.clone(), LayerCache::Sigmoid { output: y }))
            }
            LayerSpec::Lstm { hidden, return_sequences, .. } => {
                let (h, cache) = lstm_forward(x, hidden, self.lstm_params(false))?;
                let steps = h.shape()[0];
                let y = if return_sequences { h } else { Tensor::vector(h.row(steps - 1).to_vec()) };
                Ok((y, LayerCache::Lstm { cache, steps }))
            }
            LayerSpec::BiLstm { hidden, return_sequences, .. } => {
                let (h, cache) = bilstm_forward(x, hidden, self.lstm_params(false), self.lstm_params(true))?;
                let steps = h.shape()[0];
                let y = if return_sequences {
                    h
                } else {
                    // final state of each direction
                    let mut v = h.row(steps - 1)[..hidden].to_vec();
                    v.extend_from_slice(&h.row(0)[hidden..]);
                    Tensor::vector(v)
                };
                Ok((y, LayerCache::BiLstm { cache, steps }))
            }
            LayerSpec::Conv1d { out_channels, kernel_size, padding, .. } => {
                let (y, cache) = conv1d_forward(
                    x,
                    kernel_size,
                    out_channels,
                    padding,
                    self.values(ParamRole::Kernel),
                    self.values(ParamRole::Bias),
                )?;
                Ok((y, LayerCache::Conv1d { cache }))
            }
            LayerSpec::MaxPool1d { pool_size } => {
                let (y, cache) = maxpool1d(x, pool_size)?;
                Ok((y, LayerCache::MaxPool1d { cache }))
            }
            LayerSpec::GlobalAvgPool1d => {
                let (len, _) = x.as_sequence();
                Ok((global_avg_pool(x), LayerCache::GlobalAvgPool1d { in_len: len }))
            }
            LayerSpec::Dropout { rate } => {
                let (y, mask) = dropout(x, rate, mode, rng);
                Ok((y, LayerCache::Dropout { mask }))
            }
            LayerSpec::ChannelSeries => {
                let (steps, channels) = x.as_sequence();
                let y = transpose(x.data(), steps, channels);
                Ok((Tensor::matrix(steps * channels, 1, y)?, LayerCache::ChannelSeries { steps, channels }))
            }
        }
    }

    /// `grads` holds one buffer per entry of `self.params`, same order.
    pub fn backward(&self, cache: &LayerCache, grad_out: &Tensor, grads: &mut [Vec<f64>]) -> Result<Tensor, NnError> {
        match (&self.spec, cache) {
            (LayerSpec::Dense { bias, .. }, LayerCache::Dense { input }) => {
                let (gw, rest) = grads.split_at_mut(1);
                let gb = if *bias { Some(rest[0].as_mut_slice()) } else { None };
                dense_backward(input, self.values(ParamRole::Weight), grad_out, &mut gw[0], gb)
            }
            (LayerSpec::Relu, LayerCache::Relu { input }) => Ok(relu_backward(input, grad_out)),
            (LayerSpec::Sigmoid, LayerCache::Sigmoid { output }) => Ok(sigmoid_backward(output, grad_out)),
            (LayerSpec::Lstm { hidden, return_sequences, .. }, LayerCache::Lstm { cache, steps }) => {
                let g = expand_last(grad_out, *steps, *hidden, *return_sequences, false);
                let [gi, gh, gb] = grads else {
                    return Err(NnError::InvalidSpec("lstm gradient buffers".into()));
                };
                lstm_backward(
                    cache,
                    self.lstm_params(false),
                    &g,
                    LstmGrads { w_ih: gi, w_hh: gh, bias: gb },
                )
            }
            (LayerSpec::BiLstm { hidden, return_sequences, .. }, LayerCache::BiLstm { cache, steps }) => {
                let g = expand_last(grad_out, *steps, *hidden, *return_sequences, true);
                let [gi, gh, gb, ri, rh, rb] = grads else {
                    return Err(NnError::InvalidSpec("bilstm gradient buffers".into()));
                };
                bilstm_backward(
                    cache,
                    self.lstm_params(false),
                    self.lstm_params(true),
                    &g,
                    LstmGrads { w_ih: gi, w_hh: gh, bias: gb },
                    LstmGrads { w_ih: ri, w_hh: rh, bias: rb },
                )
            }
            (LayerSpec::Conv1d { kernel_size, .. }, LayerCache::Conv1d { cache }) => {
                let ki = self.index_of(ParamRole::Kernel);
                let bi = self.index_of(ParamRole::Bias);
                let (lo, hi) = grads.split_at_mut(bi.max(ki));
                let (gk, gb) = if ki < bi { (&mut lo[ki], &mut hi[0]) } else { (&mut hi[0], &mut lo[bi]) };
                conv1d_backward(cache, *kernel_size, self.values(ParamRole::Kernel), grad_out, gk, gb)
            }
            (LayerSpec::MaxPool1d { .. }, LayerCache::MaxPool1d { cache }) => maxpool1d_backward(cache, grad_out),
            (LayerSpec::GlobalAvgPool1d, LayerCache::GlobalAvgPool1d { in_len }) => {
                Ok(global_avg_pool_backward(*in_len, grad_out))
            }
            (LayerSpec::Dropout { .. }, LayerCache::Dropout { mask }) => {
                Ok(dropout_backward(mask.as_deref(), grad_out))
            }
            (LayerSpec::ChannelSeries, LayerCache::ChannelSeries { steps, channels }) => {
                let g = transpose(grad_out.data(), *channels, *steps);
                Tensor::matrix(*steps, *channels, g)
            }
            (spec, _) => Err(NnError::InvalidSpec(format!("cache does not belong to a {} layer", spec.kind()))),
        }
    }
}

/// Row-major `(rows, cols)` to row-major `(cols, rows)`.
fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for r in 0..rows {
        for c in 0..cols {
            y[c * rows + r] = x[r * cols + c];
        }
    }
    y
}

/// Lifts a last-step gradient back onto the full `(T, width)` sequence.
fn expand_last(grad_out: &Tensor, steps: usize, hidden: usize, return_sequences: bool, bidirectional: bool) -> Tensor {
    if return_sequences {
        return grad_out.clone();
    }
    let width = if bidirectional { 2 * hidden } else { hidden };
    let mut g = vec![0.0; steps * width];
    let go = grad_out.data();
    if bidirectional {
        let last = (steps - 1) * width;
        g[last..last + hidden].copy_from_slice(&go[..hidden]);
        g[hidden..width].copy_from_slice(&go[hidden..]);
    } else {
        g[(steps - 1) * width..].copy_from_slice(go);
    }
    Tensor::matrix(steps, width, g).expect("steps x width")
}
