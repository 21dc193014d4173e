use rayon::prelude::*;

use super::loss::bce_loss;
use super::trainer::input_tensor;
use super::TrainError;
use crate::nn::Model;
use crate::pipeline::WindowedDataset;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    /// Mean BCE.
    pub loss: f64,
    pub accuracy: f64,
    /// Zero when nothing is predicted positive.
    pub precision: f64,
    /// Zero when there are no positive targets.
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl Metrics {
    /// Confusion counts of hard classes against targets.
    pub fn from_classes(targets: &[u8], classes: &[u8], loss: f64) -> Metrics {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&y, &c) in targets.iter().zip(classes) {
            match (y, c) {
                (1, 1) => tp += 1,
                (0, 1) => fp += 1,
                (0, _) => tn += 1,
                _ => fn_ += 1,
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Metrics {
            loss,
            accuracy: ratio(tp + tn, targets.len()),
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
        }
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Eval-mode metrics; class 1 iff `p >= threshold`.
pub fn evaluate(model: &Model, ds: &WindowedDataset, threshold: f64) -> Result<Metrics, TrainError> {
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let probs: Vec<f64> = (0..ds.len())
        .into_par_iter()
        .map(|i| Ok(model.predict(&input_tensor(model, ds, i)?)?.data()[0]))
        .collect::<Result<_, TrainError>>()?;
    let targets = ds.targets();
    let loss = probs.iter().zip(targets).map(|(&p, &y)| bce_loss(p, f64::from(y)).0).sum::<f64>() / ds.len() as f64;
    let classes: Vec<u8> = probs.iter().map(|&p| u8::from(p >= threshold)).collect();
    Ok(Metrics::from_classes(targets, &classes, loss))
}
