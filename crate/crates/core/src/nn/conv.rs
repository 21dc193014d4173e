//! 1D convolution over `(length, channels)` sequences.
//!
//! Kernels are stored `(C_out, k, C_in)` so that one output channel's taps
//! form a contiguous run matching `k` consecutive rows of the padded input.

use super::dense::{axpy, matvec};
use super::{NnError, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Padding {
    Valid,
    /// Zero padding keeping the length; the extra pad goes right when `k` is even.
    Same,
}

impl Padding {
    /// `(left, right)` zero rows for kernel size `k`.
    pub fn amounts(self, kernel: usize) -> (usize, usize) {
        match self {
            Padding::Valid => (0, 0),
            Padding::Same => {
                let total = kernel - 1;
                (total / 2, total - total / 2)
            }
        }
    }

    pub fn output_len(self, len: usize, kernel: usize) -> Option<usize> {
        match self {
            Padding::Same => Some(len),
            Padding::Valid => (len >= kernel).then(|| len - kernel + 1),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvCache {
    padded: Vec<f64>,
    padded_len: usize,
    in_len: usize,
    in_channels: usize,
    left_pad: usize,
}

pub fn conv1d_param_count(in_channels: usize, out_channels: usize, kernel: usize) -> usize {
    out_channels * (kernel * in_channels + 1)
}

pub fn conv1d_forward(
    x: &Tensor,
    kernel_size: usize,
    out_channels: usize,
    padding: Padding,
    kernel: &[f64],
    bias: &[f64],
) -> Result<(Tensor, ConvCache), NnError> {
    let (len, cin) = x.as_sequence();
    let out_len = padding
        .output_len(len, kernel_size)
        .ok_or(NnError::KernelTooLarge { kernel: kernel_size, length: len })?;
    let span = kernel_size * cin;
    if kernel.len() != out_channels * span || bias.len() != out_channels {
        return Err(NnError::ShapeMismatch {
            expected: vec![out_channels, kernel_size, cin],
            found: vec![kernel.len(), bias.len()],
        });
    }
    let (left, right) = padding.amounts(kernel_size);
    let padded_len = len + left + right;
    let mut padded = vec![0.0; padded_len * cin];
    padded[left * cin..(left + len) * cin].copy_from_slice(x.data());

    let mut out = vec![0.0; out_len * out_channels];
    for t in 0..out_len {
        let window = &padded[t * cin..t * cin + span];
        let row = &mut out[t * out_channels..(t + 1) * out_channels];
        matvec(kernel, window, row);
        for (y, &b) in row.iter_mut().zip(bias) {
            *y += b;
        }
    }
    let cache = ConvCache {
        padded,
        padded_len,
        in_len: len,
        in_channels: cin,
        left_pad: left,
    };
    Ok((Tensor::matrix(out_len, out_channels, out)?, cache))
}

pub fn conv1d_backward(
    cache: &ConvCache,
    kernel_size: usize,
    kernel: &[f64],
    grad_out: &Tensor,
    grad_kernel: &mut [f64],
    grad_bias: &mut [f64],
) -> Result<Tensor, NnError> {
    let (out_len, out_channels) = grad_out.as_sequence();
    let cin = cache.in_channels;
    let span = kernel_size * cin;
    if kernel.len() != out_channels * span || grad_kernel.len() != kernel.len() {
        return Err(NnError::ShapeMismatch {
            expected: vec![out_channels, kernel_size, cin],
            found: vec![kernel.len()],
        });
    }
    let mut dpad = vec![0.0; cache.padded_len * cin];
    let g = grad_out.data();
    for t in 0..out_len {
        let window = &cache.padded[t * cin..t * cin + span];
        for o in 0..out_channels {
            let go = g[t * out_channels + o];
            grad_bias[o] += go;
            if go == 0.0 {
                continue;
            }
            axpy(go, window, &mut grad_kernel[o * span..(o + 1) * span]);
            axpy(go, &kernel[o * span..(o + 1) * span], &mut dpad[t * cin..t * cin + span]);
        }
    }
    let start = cache.left_pad * cin;
    let dx = dpad[start..start + cache.in_len * cin].to_vec();
    Tensor::matrix(cache.in_len, cin, dx)
}
