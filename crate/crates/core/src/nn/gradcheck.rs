//! Central-difference gradient checker over every model parameter.

use super::dropout::Mode;
use super::{Model, NnError, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Models above this size are too slow to check one coordinate at a time.
pub const MAX_CHECKED_PARAMS: usize = 10_000;

/// Denominator floor of [`relative_error`].
pub const RELATIVE_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(layer, array name, flat index)` of the worst coordinate.
    pub worst: Option<(usize, String, usize)>,
    pub checked: usize,
}

/// `|a − n| / max(|a|, |n|, 1e-4)`; the floor keeps near-zero gradients from
/// turning roundoff into large ratios.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

fn batch_loss<F>(model: &Model, inputs: &[Tensor], targets: &[f64], loss: &F) -> Result<f64, NnError>
where
    F: Fn(&Tensor, f64) -> (f64, Tensor),
{
    let mut total = 0.0;
    for (x, &y) in inputs.iter().zip(targets) {
        total += loss(&model.predict(x)?, y).0;
    }
    Ok(total / inputs.len() as f64)
}

/// Compares backprop gradients of the mean batch loss with
/// `(L(θ+ε) − L(θ−ε)) / 2ε` for every parameter. Runs in eval mode, so
/// dropout is off. `loss` maps `(output, target)` to `(loss, dloss/doutput)`.
pub fn gradient_check<F>(model: &mut Model, inputs: &[Tensor], targets: &[f64], eps: f64, loss: F) -> Result<GradCheckReport, NnError>
where
    F: Fn(&Tensor, f64) -> (f64, Tensor),
{
    let n = model.param_count();
    if n > MAX_CHECKED_PARAMS {
        return Err(NnError::TooManyParameters(n));
    }
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(NnError::InvalidSpec("gradient check needs matching nonempty inputs and targets".into()));
    }
    let mut grads = model.zero_grads();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (x, &y) in inputs.iter().zip(targets) {
        let (out, trace) = model.forward(x, Mode::Eval, &mut rng)?;
        let (_, g) = loss(&out, y);
        model.backward(&trace, &g, &mut grads)?;
    }
    grads.scale(1.0 / inputs.len() as f64);

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    let layer_count = model.layers().len();
    for li in 0..layer_count {
        let roles: Vec<_> = model.layers()[li].params.iter().map(|p| p.role).collect();
        for (pi, role) in roles.into_iter().enumerate() {
            let len = model.layers()[li].params[pi].values.len();
            for k in 0..len {
                let orig = model.layers()[li].params[pi].values[k];
                set(model, li, role, k, orig + eps);
                let lp = batch_loss(model, inputs, targets, &loss)?;
                set(model, li, role, k, orig - eps);
                let lm = batch_loss(model, inputs, targets, &loss)?;
                set(model, li, role, k, orig);
                let numeric = (lp - lm) / (2.0 * eps);
                let err = relative_error(grads.buffers[li][pi][k], numeric);
                report.checked += 1;
                if err > report.max_rel_error || report.worst.is_none() {
                    report.max_rel_error = err.max(report.max_rel_error);
                    report.worst = Some((li, role.to_string(), k));
                }
            }
        }
    }
    Ok(report)
}

fn set(model: &mut Model, layer: usize, role: super::ParamRole, k: usize, v: f64) {
    model.param_mut(layer, role).expect("role exists").values[k] = v;
}
