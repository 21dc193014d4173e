//! Fully connected layer, `y = W x + b` with `W` stored `(out, in)` row-major.

use super::{NnError, Tensor};

pub fn dense_forward(x: &Tensor, weight: &[f64], bias: Option<&[f64]>, out_dim: usize) -> Result<Tensor, NnError> {
    let in_dim = x.len();
    if weight.len() != in_dim * out_dim {
        return Err(NnError::ShapeMismatch {
            expected: vec![out_dim, in_dim],
            found: vec![weight.len()],
        });
    }
    if let Some(b) = bias {
        if b.len() != out_dim {
            return Err(NnError::ShapeMismatch {
                expected: vec![out_dim],
                found: vec![b.len()],
            });
        }
    }
    let mut out = vec![0.0; out_dim];
    matvec(weight, x.data(), &mut out);
    if let Some(b) = bias {
        for (y, &bo) in out.iter_mut().zip(b) {
            *y += bo;
        }
    }
    Ok(Tensor::vector(out))
}

/// Accumulates `dW += g xᵀ` and `db += g`, returns `dx = Wᵀ g`.
pub fn dense_backward(
    x: &Tensor,
    weight: &[f64],
    grad_out: &Tensor,
    grad_weight: &mut [f64],
    grad_bias: Option<&mut [f64]>,
) -> Result<Tensor, NnError> {
    let in_dim = x.len();
    let out_dim = grad_out.len();
    if weight.len() != in_dim * out_dim || grad_weight.len() != weight.len() {
        return Err(NnError::ShapeMismatch {
            expected: vec![out_dim, in_dim],
            found: vec![weight.len()],
        });
    }
    let xs = x.data();
    let g = grad_out.data();
    let mut dx = vec![0.0; in_dim];
    for (o, (w_row, dw_row)) in weight
        .chunks_exact(in_dim)
        .zip(grad_weight.chunks_exact_mut(in_dim))
        .enumerate()
    {
        let go = g[o];
        if go == 0.0 {
            continue;
        }
        axpy(go, xs, dw_row);
        axpy(go, w_row, &mut dx);
    }
    if let Some(db) = grad_bias {
        for (d, &go) in db.iter_mut().zip(g) {
            *d += go;
        }
    }
    Ok(Tensor::new(x.shape().to_vec(), dx).expect("dx mirrors x"))
}

/// `out[o] = dot(w[o], x)` for row-major `w` of `out.len()` rows. Blocks of
/// rows share each pass over `x`; every row still sums in index order, so
/// the result is bitwise that of [`dot`].
pub(crate) fn matvec(w: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    debug_assert_eq!(w.len(), n * out.len());
    let mut o = 0;
    while o + 8 <= out.len() {
        let mut acc = [-0.0f64; 8];
        let block = &w[o * n..(o + 8) * n];
        for i in 0..n {
            let xi = x[i];
            for (k, a) in acc.iter_mut().enumerate() {
                *a += block[k * n + i] * xi;
            }
        }
        out[o..o + 8].copy_from_slice(&acc);
        o += 8;
    }
    for (y, row) in out[o..].iter_mut().zip(w[o * n..].chunks_exact(n)) {
        *y = dot(row, x);
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_is_bitwise_dot() {
        let n = 13;
        for rows in [1, 3, 4, 7, 9] {
            let w: Vec<f64> = (0..rows * n).map(|i| ((i * 7919 % 101) as f64 - 50.0) / 37.0).collect();
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.731).sin()).collect();
            let mut out = vec![0.0; rows];
            matvec(&w, &x, &mut out);
            for (o, y) in out.iter().enumerate() {
                assert_eq!(y.to_bits(), dot(&w[o * n..(o + 1) * n], &x).to_bits());
            }
        }
    }

    #[test]
    fn zero_weight_returns_bias() {
        let x = Tensor::vector(vec![1.0, -4.0, 9.0]);
        let y = dense_forward(&x, &[0.0; 3], Some(&[3.5]), 1).unwrap();
        assert_eq!(y.data(), &[3.5]);
    }

    #[test]
    fn known_product() {
        let x = Tensor::vector(vec![1.0, 2.0]);
        let w = [1.0, 0.0, 0.5, -1.0, 2.0, 2.0];
        let y = dense_forward(&x, &w, Some(&[0.0, 1.0, -1.0]), 3).unwrap();
        assert_eq!(y.data(), &[1.0, -0.5, 5.0]);
    }

    #[test]
    fn weight_length_checked() {
        let x = Tensor::vector(vec![1.0, 2.0]);
        assert!(matches!(
            dense_forward(&x, &[0.0; 5], None, 3),
            Err(NnError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn backward_against_central_differences() {
        // 4 -> 3, loss = sum(c ⊙ y)
        let x = Tensor::vector(vec![0.3, -1.2, 0.7, 2.0]);
        let mut w: Vec<f64> = (0..12).map(|i| ((i * 7 % 11) as f64 - 5.0) / 7.0).collect();
        let mut b = vec![0.1, -0.2, 0.3];
        let c = [0.5, -1.5, 2.0];
        let loss = |w: &[f64], b: &[f64], x: &Tensor| -> f64 {
            let y = dense_forward(x, w, Some(b), 3).unwrap();
            y.data().iter().zip(c).map(|(a, b)| a * b).sum()
        };
        let mut dw = vec![0.0; 12];
        let mut db = vec![0.0; 3];
        let dx = dense_backward(&x, &w, &Tensor::vector(c.to_vec()), &mut dw, Some(&mut db)).unwrap();
        let eps = 1e-6;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-4);
        for i in 0..12 {
            let orig = w[i];
            w[i] = orig + eps;
            let lp = loss(&w, &b, &x);
            w[i] = orig - eps;
            let lm = loss(&w, &b, &x);
            w[i] = orig;
            assert!(rel(dw[i], (lp - lm) / (2.0 * eps)) < 1e-7);
        }
        for i in 0..3 {
            let orig = b[i];
            b[i] = orig + eps;
            let lp = loss(&w, &b, &x);
            b[i] = orig - eps;
            let lm = loss(&w, &b, &x);
            b[i] = orig;
            assert!(rel(db[i], (lp - lm) / (2.0 * eps)) < 1e-7);
        }
        for i in 0..4 {
            let mut xp = x.clone();
            xp.data_mut()[i] += eps;
            let mut xm = x.clone();
            xm.data_mut()[i] -= eps;
            let n = (loss(&w, &b, &xp) - loss(&w, &b, &xm)) / (2.0 * eps);
            assert!(rel(dx.data()[i], n) < 1e-7);
        }
    }
}
