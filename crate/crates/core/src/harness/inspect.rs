use std::fmt::Write as _;
use std::path::Path;

use super::run::{load_dataset, load_model};
use super::Result;
use crate::models::{build_model, verify_parity, Architecture, BuildMode, ParityReport};
use crate::nn::{LayerSpec, Model};

/// Builds the parity blueprint and checks it against the built-in table.
/// Unexpected mismatches come back as `ModelError::UnexpectedMismatch`,
/// which carries the full report.
pub fn cmd_verify(arch: Architecture) -> Result<(ParityReport, String)> {
    let bp = build_model(arch, BuildMode::published())?;
    let report = verify_parity(&bp)?;
    let text = report.render();
    Ok((report, text))
}

/// Layer names of the matching built-in blueprint, else `kind_n` names.
fn layer_names(model: &Model) -> Vec<String> {
    let specs = model.specs();
    if let Ok(arch) = model.name.parse::<Architecture>() {
        let shape = model.input_shape();
        let candidates = [
            BuildMode::Parity { input_width: shape.iter().product() },
            BuildMode::Canonical { lookback: shape[0], features: shape.get(1).copied().unwrap_or(1) },
        ];
        for mode in candidates {
            if let Ok(bp) = build_model(arch, mode) {
                if bp.specs() == specs && bp.input_shape() == shape {
                    return bp.layers().iter().map(|l| l.name.clone()).collect();
                }
            }
        }
    }
    let mut counts = std::collections::HashMap::new();
    specs
        .iter()
        .map(|s| {
            let n = counts.entry(s.kind()).or_insert(0);
            *n += 1;
            format!("{}_{n}", s.kind())
        })
        .collect()
}

/// `(name, output shape, parameter count)` for each non-activation layer.
pub fn layer_table(model: &Model) -> Vec<(String, Vec<usize>, usize)> {
    let specs = model.specs();
    let shapes = Model::shape_chain(model.input_shape(), &specs).expect("decoded models are shape-checked");
    layer_names(model)
        .into_iter()
        .zip(&specs)
        .zip(&shapes[1..])
        .filter(|((_, s), _)| !matches!(s, LayerSpec::Relu | LayerSpec::Sigmoid))
        .map(|((name, s), shape)| (name, shape.clone(), s.param_count()))
        .collect()
}

pub fn cmd_inspect(checkpoint: &Path, dataset: Option<&Path>) -> Result<String> {
    let model = load_model(checkpoint)?;
    let mut out = String::new();
    let dims = |s: &[usize]| s.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
    writeln!(out, "model: {}  input (bs, {})", model.name, dims(model.input_shape())).unwrap();
    writeln!(out, "{:<30} {:<20} {:>10}", "Layer", "Output Shape", "Param #").unwrap();
    for (name, shape, count) in layer_table(&model) {
        writeln!(out, "{:<30} {:<20} {:>10}", name, format!("(bs, {})", dims(&shape)), count).unwrap();
    }
    writeln!(out, "Total params: {}", model.param_count()).unwrap();
    if let Some(path) = dataset {
        let ds = load_dataset(path)?;
        let c = ds.config;
        writeln!(out, "\ndataset: {}", path.display()).unwrap();
        writeln!(out, "rows: {}  lookback {}  horizon {}  features {}  width {}", ds.len(), c.lookback, c.horizon, c.features, c.width())
            .unwrap();
        writeln!(out, "positive rate: {:.4}", ds.positive_rate()).unwrap();
        writeln!(out, "normalized: {}", if ds.norm_stats().is_some() { "yes" } else { "no" }).unwrap();
    }
    Ok(out)
}
