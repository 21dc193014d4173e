use super::{PipelineError, WindowedDataset};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.8 }
    }
}

fn head_count(n: usize, fraction: f64) -> Result<usize, PipelineError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(PipelineError::InvalidConfig(format!("split fraction {fraction} outside (0, 1)")));
    }
    // tolerance absorbs products like 0.7 * 10 = 7.000000000000001
    Ok((((n as f64) * fraction) - 1e-9).ceil().max(0.0) as usize)
}

/// Earliest `⌈N·fraction⌉` rows by anchor time go to train, the rest to test.
pub fn split_chronological(ds: &WindowedDataset, spec: SplitSpec) -> Result<(WindowedDataset, WindowedDataset), PipelineError> {
    if ds.anchors.len() != ds.len() {
        return Err(PipelineError::MissingAnchors);
    }
    let n_train = head_count(ds.len(), spec.train_fraction)?;
    if n_train == 0 || n_train >= ds.len() {
        return Err(PipelineError::DegenerateSplit {
            train: n_train.min(ds.len()),
            test: ds.len().saturating_sub(n_train),
        });
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by_key(|&i| ds.anchors[i]);
    Ok((ds.select(&order[..n_train]), ds.select(&order[n_train..])))
}

/// Splits off the last `fraction` of rows in stored order. Containers keep
/// rows chronological, so this is the validation split for loaded data.
pub fn holdout_tail(ds: &WindowedDataset, fraction: f64) -> Result<(WindowedDataset, WindowedDataset), PipelineError> {
    let n_head = head_count(ds.len(), 1.0 - fraction)?;
    if n_head == 0 || n_head >= ds.len() {
        return Err(PipelineError::DegenerateSplit {
            train: n_head.min(ds.len()),
            test: ds.len().saturating_sub(n_head),
        });
    }
    let idx: Vec<usize> = (0..ds.len()).collect();
    Ok((ds.select(&idx[..n_head]), ds.select(&idx[n_head..])))
}
