//! Flat dataset container, little-endian:
//!
//! ```text
//! "NWC1"  N:u64  L:u64  F:u64  h:u64
//! inputs: f64 * N*L*F (row-major)
//! targets: u8 * N
//! stats: (min:f64, max:f64) * F   -- NaN pairs when unnormalized
//! ```
//!
//! Anchor timestamps are not stored; rows are written in chronological order.

use std::io::{Read, Write};

use super::{NormStats, PipelineError, WindowConfig, WindowedDataset};

pub const DATASET_MAGIC: &[u8; 4] = b"NWC1";

pub fn encode_dataset(ds: &WindowedDataset) -> Vec<u8> {
    let cfg = ds.config;
    let mut out = Vec::with_capacity(36 + ds.inputs.len() * 8 + ds.len() + cfg.features * 16);
    out.extend_from_slice(DATASET_MAGIC);
    for v in [ds.len(), cfg.lookback, cfg.features, cfg.horizon] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for v in &ds.inputs {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&ds.targets);
    for k in 0..cfg.features {
        let (lo, hi) = ds
            .norm_stats
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |s| (s.mins[k], s.maxs[k]));
        out.extend_from_slice(&lo.to_le_bytes());
        out.extend_from_slice(&hi.to_le_bytes());
    }
    out
}

fn corrupt(msg: impl Into<String>) -> PipelineError {
    PipelineError::CorruptDataset(msg.into())
}

pub fn decode_dataset(bytes: &[u8]) -> Result<WindowedDataset, PipelineError> {
    if bytes.len() < 36 || &bytes[..4] != DATASET_MAGIC {
        return Err(corrupt("missing NWC1 header"));
    }
    let word = |i: usize| -> Result<usize, PipelineError> {
        let raw = u64::from_le_bytes(bytes[4 + 8 * i..12 + 8 * i].try_into().expect("8 bytes"));
        usize::try_from(raw).map_err(|_| corrupt("header value overflows"))
    };
    let (n, l, f, h) = (word(0)?, word(1)?, word(2)?, word(3)?);
    let cfg = WindowConfig {
        lookback: l,
        horizon: h,
        features: f,
    };
    cfg.validate().map_err(|e| corrupt(e.to_string()))?;
    let values = n
        .checked_mul(l * f)
        .ok_or_else(|| corrupt("size overflow"))?;
    let expected = values
        .checked_mul(8)
        .and_then(|v| v.checked_add(36 + n + 16 * f))
        .ok_or_else(|| corrupt("size overflow"))?;
    if bytes.len() != expected {
        return Err(corrupt(format!("{} bytes, header implies {expected}", bytes.len())));
    }
    let mut pos = 36;
    let mut next_f64 = || {
        let v = f64::from_le_bytes(bytes[pos..pos + 8].try_into().expect("8 bytes"));
        pos += 8;
        v
    };
    let inputs: Vec<f64> = (0..values).map(|_| next_f64()).collect();
    let stats_start = 36 + values * 8 + n;
    let targets = bytes[36 + values * 8..stats_start].to_vec();
    let mut pos = stats_start;
    let mut mins = Vec::with_capacity(f);
    let mut maxs = Vec::with_capacity(f);
    for _ in 0..f {
        mins.push(f64::from_le_bytes(bytes[pos..pos + 8].try_into().expect("8 bytes")));
        maxs.push(f64::from_le_bytes(bytes[pos + 8..pos + 16].try_into().expect("8 bytes")));
        pos += 16;
    }
    let stats = if mins.iter().chain(&maxs).all(|v| v.is_nan()) {
        None
    } else {
        Some(NormStats { mins, maxs })
    };
    WindowedDataset::from_parts(cfg, inputs, targets, Vec::new(), stats).map_err(|e| corrupt(e.to_string()))
}

pub fn write_dataset<W: Write>(ds: &WindowedDataset, mut w: W) -> Result<(), PipelineError> {
    w.write_all(&encode_dataset(ds))?;
    Ok(())
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<WindowedDataset, PipelineError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_dataset(&bytes)
}
