//! Binary model container, little-endian throughout:
//!
//! ```text
//! "NWM1"  layer_count:u32
//! per layer:
//!   kind:u8  hyper_count:u8  hyper:u64 * hyper_count
//!   array_count:u8
//!   per array: role:u8  rank:u8  dims:u64 * rank  values:f64 * prod(dims)
//! trailer: input_rank:u8  input_dims:u64 * rank  name_len:u32  name:utf8
//! ```

use std::io::{Read, Write};

use super::conv::Padding;
use super::layer::{Layer, LayerSpec, Param, ParamRole};
use super::{Model, NnError};

pub const MODEL_MAGIC: &[u8; 4] = b"NWM1";

fn kind_tag(spec: &LayerSpec) -> u8 {
    match spec {
        LayerSpec::Dense { .. } => 0,
        LayerSpec::Relu => 1,
        LayerSpec::Sigmoid => 2,
        LayerSpec::Lstm { .. } => 3,
        LayerSpec::BiLstm { .. } => 4,
        LayerSpec::Conv1d { .. } => 5,
        LayerSpec::MaxPool1d { .. } => 6,
        LayerSpec::GlobalAvgPool1d => 7,
        LayerSpec::Dropout { .. } => 8,
        LayerSpec::ChannelSeries => 9,
    }
}

fn hyperparameters(spec: &LayerSpec) -> Vec<u64> {
    match *spec {
        LayerSpec::Dense { input, output, bias } => vec![input as u64, output as u64, bias as u64],
        LayerSpec::Lstm { input, hidden, return_sequences } | LayerSpec::BiLstm { input, hidden, return_sequences } => {
            vec![input as u64, hidden as u64, return_sequences as u64]
        }
        LayerSpec::Conv1d { in_channels, out_channels, kernel_size, padding } => vec![
            in_channels as u64,
            out_channels as u64,
            kernel_size as u64,
            matches!(padding, Padding::Same) as u64,
        ],
        LayerSpec::MaxPool1d { pool_size } => vec![pool_size as u64],
        LayerSpec::Dropout { rate } => vec![rate.to_bits()],
        LayerSpec::Relu | LayerSpec::Sigmoid | LayerSpec::GlobalAvgPool1d | LayerSpec::ChannelSeries => Vec::new(),
    }
}

fn spec_from(tag: u8, h: &[u64]) -> Result<LayerSpec, NnError> {
    let bad = || NnError::CorruptCheckpoint(format!("layer kind {tag} with {} hyperparameters", h.len()));
    let flag = |v: u64| match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(bad()),
    };
    let u = |v: u64| usize::try_from(v).map_err(|_| bad());
    let spec = match (tag, h) {
        (0, [i, o, b]) => LayerSpec::Dense { input: u(*i)?, output: u(*o)?, bias: flag(*b)? },
        (1, []) => LayerSpec::Relu,
        (2, []) => LayerSpec::Sigmoid,
        (3, [i, hd, r]) => LayerSpec::Lstm { input: u(*i)?, hidden: u(*hd)?, return_sequences: flag(*r)? },
        (4, [i, hd, r]) => LayerSpec::BiLstm { input: u(*i)?, hidden: u(*hd)?, return_sequences: flag(*r)? },
        (5, [ci, co, k, p]) => LayerSpec::Conv1d {
            in_channels: u(*ci)?,
            out_channels: u(*co)?,
            kernel_size: u(*k)?,
            padding: if flag(*p)? { Padding::Same } else { Padding::Valid },
        },
        (6, [p]) => LayerSpec::MaxPool1d { pool_size: u(*p)? },
        (7, []) => LayerSpec::GlobalAvgPool1d,
        (8, [r]) => LayerSpec::Dropout { rate: f64::from_bits(*r) },
        (9, []) => LayerSpec::ChannelSeries,
        _ => return Err(bad()),
    };
    spec.validate().map_err(|e| NnError::CorruptCheckpoint(e.to_string()))?;
    Ok(spec)
}

pub fn encode_model(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for layer in model.layers() {
        out.push(kind_tag(&layer.spec));
        let hyper = hyperparameters(&layer.spec);
        out.push(hyper.len() as u8);
        for h in hyper {
            out.extend_from_slice(&h.to_le_bytes());
        }
        out.push(layer.params.len() as u8);
        for p in &layer.params {
            out.push(p.role.tag());
            out.push(p.shape.len() as u8);
            for &d in &p.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &p.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out.push(model.input_shape().len() as u8);
    for &d in model.input_shape() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&(model.name.len() as u32).to_le_bytes());
    out.extend_from_slice(model.name.as_bytes());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            NnError::CorruptCheckpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, NnError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn dims(&mut self) -> Result<Vec<usize>, NnError> {
        let rank = self.u8()? as usize;
        (0..rank)
            .map(|_| {
                let d = self.u64()?;
                usize::try_from(d).map_err(|_| NnError::CorruptCheckpoint(format!("dimension {d}")))
            })
            .collect()
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<Model, NnError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MODEL_MAGIC {
        return Err(NnError::CorruptCheckpoint("bad magic".into()));
    }
    let layer_count = cur.u32()? as usize;
    let mut layers = Vec::with_capacity(layer_count.min(1024));
    for index in 0..layer_count {
        let tag = cur.u8()?;
        let hcount = cur.u8()? as usize;
        let hyper = (0..hcount).map(|_| cur.u64()).collect::<Result<Vec<_>, _>>()?;
        let spec = spec_from(tag, &hyper)?;
        let expected = spec.param_shapes();
        let count = cur.u8()? as usize;
        if count != expected.len() {
            return Err(NnError::CorruptCheckpoint(format!(
                "layer {index}: {count} arrays, {} expected",
                expected.len()
            )));
        }
        let mut params = Vec::with_capacity(count);
        for (role_expected, shape_expected) in expected {
            let role = ParamRole::from_tag(cur.u8()?)
                .ok_or_else(|| NnError::CorruptCheckpoint(format!("layer {index}: unknown role tag")))?;
            let shape = cur.dims()?;
            if role != role_expected || shape != shape_expected {
                return Err(NnError::CorruptCheckpoint(format!(
                    "layer {index}: array {role} {shape:?} does not match {role_expected} {shape_expected:?}"
                )));
            }
            let n: usize = shape.iter().product();
            let raw = cur.take(n.checked_mul(8).ok_or_else(|| NnError::CorruptCheckpoint("array size".into()))?)?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            params.push(Param { role, shape, values });
        }
        layers.push(Layer { spec, params });
    }
    let input_shape = cur.dims()?;
    let name_len = cur.u32()? as usize;
    let name = String::from_utf8(cur.take(name_len)?.to_vec())
        .map_err(|_| NnError::CorruptCheckpoint("model name is not UTF-8".into()))?;
    if cur.pos != bytes.len() {
        return Err(NnError::CorruptCheckpoint(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    Model::from_layers(name, input_shape, layers).map_err(|e| NnError::CorruptCheckpoint(e.to_string()))
}

pub fn write_model<W: Write>(model: &Model, mut w: W) -> Result<(), NnError> {
    w.write_all(&encode_model(model))?;
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<Model, NnError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_model(&bytes)
}
