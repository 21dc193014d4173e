use rand::Rng;

use super::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted dropout. Returns the output and, in train mode with a nonzero
/// rate, the per-element scale mask (`0` or `1/(1-rate)`) used by backward.
pub fn dropout<R: Rng + ?Sized>(x: &Tensor, rate: f64, mode: Mode, rng: &mut R) -> (Tensor, Option<Vec<f64>>) {
    if mode == Mode::Eval || rate == 0.0 {
        return (x.clone(), None);
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng.gen::<f64>() < keep { scale } else { 0.0 })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
    (Tensor::new(x.shape().to_vec(), data).expect("same shape"), Some(mask))
}

pub fn dropout_backward(mask: Option<&[f64]>, grad_out: &Tensor) -> Tensor {
    match mask {
        None => grad_out.clone(),
        Some(m) => {
            let data = grad_out.data().iter().zip(m).map(|(g, m)| g * m).collect();
            Tensor::new(grad_out.shape().to_vec(), data).expect("same shape")
        }
    }
}
