use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::log::{EpochRecord, TrainLog};
use super::loss::bce_loss;
use super::metrics::{evaluate, DEFAULT_THRESHOLD};
use super::optim::{adam_step, AdamState};
use super::{mix_seed, TrainConfig, TrainError};
use crate::nn::{Gradients, Mode, Model, Tensor};
use crate::pipeline::WindowedDataset;

/// Rows per reduction chunk. Chunks are summed in index order, so the float
/// result does not depend on how many threads ran them.
pub const REDUCE_CHUNK: usize = 4;

/// Minimum validation-loss decrease that resets the patience counter.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    /// Mean train-mode BCE over the epoch's predictions.
    pub loss: f64,
    pub accuracy: f64,
    pub steps: usize,
}

/// Row `i` of `ds` shaped as the model's input. Every input layout is a
/// reshape of the timestep-major row.
pub fn input_tensor(model: &Model, ds: &WindowedDataset, i: usize) -> Result<Tensor, TrainError> {
    let shape = model.input_shape();
    if shape.iter().product::<usize>() != ds.width() {
        return Err(TrainError::InputMismatch { width: ds.width(), shape: shape.to_vec() });
    }
    Ok(Tensor::new(shape.to_vec(), ds.row(i).to_vec())?)
}

struct Partial {
    loss: f64,
    correct: usize,
    grads: Gradients,
}

/// Summed BCE, hits, and summed parameter gradients of `rows`. Row `i`'s
/// dropout mask comes from `mix_seed(mask_seed, i)`.
fn accumulate(model: &Model, ds: &WindowedDataset, rows: &[usize], mode: Mode, mask_seed: u64) -> Result<Partial, TrainError> {
    let mut part = Partial { loss: 0.0, correct: 0, grads: model.zero_grads() };
    for &i in rows {
        let x = input_tensor(model, ds, i)?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(mask_seed, i as u64));
        let (out, trace) = model.forward(&x, mode, &mut rng)?;
        let p = out.data()[0];
        let y = f64::from(ds.targets()[i]);
        let (loss, dp) = bce_loss(p, y);
        part.loss += loss;
        part.correct += usize::from((p >= DEFAULT_THRESHOLD) == (y == 1.0));
        model.backward(&trace, &Tensor::filled(out.shape(), dp), &mut part.grads)?;
    }
    Ok(part)
}

/// Mean BCE over `rows` and its gradient, reduced in fixed chunks.
pub fn batch_gradient(
    model: &Model,
    ds: &WindowedDataset,
    rows: &[usize],
    mode: Mode,
    mask_seed: u64,
) -> Result<(f64, usize, Gradients), TrainError> {
    if rows.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let parts: Vec<Partial> = rows
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| accumulate(model, ds, chunk, mode, mask_seed))
        .collect::<Result<_, _>>()?;
    let mut iter = parts.into_iter();
    let mut total = iter.next().expect("nonempty");
    for p in iter {
        total.loss += p.loss;
        total.correct += p.correct;
        total.grads.add_assign(&p.grads);
    }
    let n = rows.len() as f64;
    total.grads.scale(1.0 / n);
    Ok((total.loss / n, total.correct, total.grads))
}

/// One pass over a seeded shuffle of `train`: full batches plus a final
/// partial batch, one Adam step each. `epoch` only labels errors.
pub fn train_epoch<R: Rng + ?Sized>(
    model: &mut Model,
    state: &mut AdamState,
    train: &WindowedDataset,
    cfg: &TrainConfig,
    rng: &mut R,
    epoch: usize,
) -> Result<EpochMetrics, TrainError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(rng);
    let mask_seed: u64 = rng.gen();
    let (mut loss_sum, mut correct, mut steps) = (0.0, 0, 0);
    for (batch, rows) in order.chunks(cfg.batch_size).enumerate() {
        let (loss, hits, grads) = batch_gradient(model, train, rows, Mode::Train, mix_seed(mask_seed, batch as u64))?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch, batch });
        }
        adam_step(model, &grads, state, cfg);
        loss_sum += loss * rows.len() as f64;
        correct += hits;
        steps += 1;
    }
    let n = train.len() as f64;
    Ok(EpochMetrics { loss: loss_sum / n, accuracy: correct as f64 / n, steps })
}

/// Trains for `cfg.epochs` epochs (fewer with patience), logging train and
/// validation metrics, both in eval mode, after each epoch. The test
/// evaluation uses the final parameters.
pub fn fit(
    model: &mut Model,
    train: &WindowedDataset,
    validation: &WindowedDataset,
    test: &WindowedDataset,
    cfg: &TrainConfig,
) -> Result<TrainLog, TrainError> {
    cfg.validate()?;
    if train.is_empty() || validation.is_empty() || test.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdamState::new(model);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut stopped_early = false;
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        train_epoch(model, &mut state, train, cfg, &mut rng, epoch)?;
        let tr = evaluate(model, train, DEFAULT_THRESHOLD)?;
        let va = evaluate(model, validation, DEFAULT_THRESHOLD)?;
        if !tr.loss.is_finite() || !va.loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch, batch: 0 });
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss: tr.loss,
            train_accuracy: tr.accuracy,
            val_loss: va.loss,
            val_accuracy: va.accuracy,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        });
        if let Some(patience) = cfg.patience {
            if va.loss < best - IMPROVEMENT_TOLERANCE {
                best = va.loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    stopped_early = epoch < cfg.epochs;
                    break;
                }
            }
        }
    }
    let test = evaluate(model, test, DEFAULT_THRESHOLD)?;
    Ok(TrainLog { epochs, test, stopped_early })
}
