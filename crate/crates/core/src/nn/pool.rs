use super::{NnError, Tensor};

#[derive(Clone, Debug)]
pub struct MaxPoolCache {
    in_len: usize,
    channels: usize,
    /// Winning input row per (output row, channel).
    argmax: Vec<usize>,
}

/// Non-overlapping windows of `pool`; a trailing remainder shorter than
/// `pool` is dropped.
pub fn maxpool1d(x: &Tensor, pool: usize) -> Result<(Tensor, MaxPoolCache), NnError> {
    let (len, ch) = x.as_sequence();
    if pool == 0 || len < pool {
        return Err(NnError::PoolTooLarge { pool, length: len });
    }
    let out_len = len / pool;
    let xs = x.data();
    let mut out = vec![0.0; out_len * ch];
    let mut argmax = vec![0; out_len * ch];
    for w in 0..out_len {
        for c in 0..ch {
            let mut best = w * pool;
            let mut best_val = xs[best * ch + c];
            for r in w * pool + 1..(w + 1) * pool {
                let v = xs[r * ch + c];
                // strict comparison keeps the first index on ties
                if v > best_val {
                    best = r;
                    best_val = v;
                }
            }
            out[w * ch + c] = best_val;
            argmax[w * ch + c] = best;
        }
    }
    Ok((
        Tensor::matrix(out_len, ch, out)?,
        MaxPoolCache {
            in_len: len,
            channels: ch,
            argmax,
        },
    ))
}

pub fn maxpool1d_backward(cache: &MaxPoolCache, grad_out: &Tensor) -> Result<Tensor, NnError> {
    if grad_out.len() != cache.argmax.len() {
        return Err(NnError::ShapeMismatch {
            expected: vec![cache.argmax.len() / cache.channels, cache.channels],
            found: grad_out.shape().to_vec(),
        });
    }
    let ch = cache.channels;
    let mut dx = vec![0.0; cache.in_len * ch];
    for (i, (&row, &g)) in cache.argmax.iter().zip(grad_out.data()).enumerate() {
        dx[row * ch + i % ch] += g;
    }
    Tensor::matrix(cache.in_len, ch, dx)
}

/// Per-channel mean over the length axis.
pub fn global_avg_pool(x: &Tensor) -> Tensor {
    let (len, ch) = x.as_sequence();
    let mut out = vec![0.0; ch];
    for row in x.data().chunks_exact(ch) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    let n = len as f64;
    out.iter_mut().for_each(|v| *v /= n);
    Tensor::vector(out)
}

pub fn global_avg_pool_backward(in_len: usize, grad_out: &Tensor) -> Tensor {
    let ch = grad_out.len();
    let n = in_len as f64;
    let mut dx = Vec::with_capacity(in_len * ch);
    for _ in 0..in_len {
        dx.extend(grad_out.data().iter().map(|g| g / n));
    }
    Tensor::matrix(in_len, ch, dx).expect("in_len x ch")
}
