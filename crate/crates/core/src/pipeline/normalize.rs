use super::{PipelineError, WindowedDataset};

pub const CLAMP_LOW: f64 = -0.5;
pub const CLAMP_HIGH: f64 = 1.5;

/// Per-feature `(min, max)` over every timestep of the training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl NormStats {
    pub fn scale(&self, feature: usize, value: f64) -> f64 {
        let (lo, hi) = (self.mins[feature], self.maxs[feature]);
        let range = hi - lo;
        if range <= 0.0 {
            return 0.0;
        }
        ((value - lo) / range).clamp(CLAMP_LOW, CLAMP_HIGH)
    }
}

pub fn fit_normalizer(train: &WindowedDataset) -> NormStats {
    let f = train.config.features;
    let mut mins = vec![f64::INFINITY; f];
    let mut maxs = vec![f64::NEG_INFINITY; f];
    for step in train.inputs.chunks_exact(f) {
        for (k, &v) in step.iter().enumerate() {
            mins[k] = mins[k].min(v);
            maxs[k] = maxs[k].max(v);
        }
    }
    if train.is_empty() {
        mins.fill(0.0);
        maxs.fill(0.0);
    }
    NormStats { mins, maxs }
}

/// Min-max scaling per feature, clamped to `[-0.5, 1.5]`. Applying the
/// stats a dataset already carries is a no-op.
pub fn apply_normalizer(ds: &WindowedDataset, stats: &NormStats) -> Result<WindowedDataset, PipelineError> {
    let f = ds.config.features;
    if stats.mins.len() != f || stats.maxs.len() != f {
        return Err(PipelineError::InvalidConfig(format!(
            "stats cover {} features, dataset has {f}",
            stats.mins.len()
        )));
    }
    match &ds.norm_stats {
        Some(existing) if existing == stats => return Ok(ds.clone()),
        Some(_) => return Err(PipelineError::NormalizerMismatch),
        None => {}
    }
    let mut out = ds.clone();
    for step in out.inputs.chunks_exact_mut(f) {
        for (k, v) in step.iter_mut().enumerate() {
            *v = stats.scale(k, *v);
        }
    }
    out.norm_stats = Some(stats.clone());
    Ok(out)
}
