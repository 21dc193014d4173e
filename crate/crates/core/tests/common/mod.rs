//! Fixtures and reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nowcast::nn::{LayerSpec, Model, Padding, ParamRole, Tensor};
use nowcast::pipeline::{WindowConfig, WindowedDataset};
use nowcast::training::bce_loss;

pub const INDIAN_HEADER: &str = "Year,Month,Date,Time,Temp,WindSpeed,Humidity,Pressure,Rainfall\n";

pub fn start_time() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2016, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One Indian-schema row per hour.
pub fn indian_csv(rows: &[(NaiveDateTime, [f64; 4], u8)]) -> String {
    let mut s = String::from(INDIAN_HEADER);
    for (t, [temp, wind, hum, pres], rain) in rows {
        writeln!(
            s,
            "{},{},{},{},{temp:.3},{wind:.3},{hum:.3},{pres:.3},{rain}",
            t.format("%Y"),
            t.format("%-m"),
            t.format("%-d"),
            t.format("%H:%M")
        )
        .unwrap();
    }
    s
}

/// Noise-driven station series with rain tied loosely to humidity.
pub fn random_station(hours: usize, seed: u64) -> String {
    let mut r = rng(seed);
    let mut hum: f64 = 70.0;
    let mut pres: f64 = 1005.0;
    let rows: Vec<_> = (0..hours)
        .map(|i| {
            hum = (hum + r.gen_range(-4.0..4.0)).clamp(20.0, 100.0);
            pres = (pres + r.gen_range(-1.0..1.0)).clamp(990.0, 1020.0);
            let temp = 28.0 + 4.0 * (i as f64 * std::f64::consts::TAU / 24.0).sin() + r.gen_range(-1.0..1.0);
            let rain = u8::from(hum > 85.0 || r.gen_bool(0.05));
            (start_time() + Duration::hours(i as i64), [temp, r.gen_range(0.0..20.0), hum, pres], rain)
        })
        .collect();
    indian_csv(&rows)
}

/// Rain at `t + 1` is `humidity(t) > humidity(t − 3) && pressure(t) <
/// pressure(t − 3)`, then 5% of labels are flipped. Humidity and pressure
/// zigzag inside narrow bands with persistent up/down trends, so three-hour
/// changes stay large after min-max scaling. Temperature and wind are smooth
/// daily cycles.
pub fn skill_station(hours: usize, seed: u64) -> String {
    let mut r = rng(seed);
    let (mut hum, mut pres) = (70.0f64, 1006.0f64);
    let (mut hum_dir, mut pres_dir) = (1.0f64, -1.0f64);
    let mut hums = Vec::with_capacity(hours);
    let mut press = Vec::with_capacity(hours);
    for _ in 0..hours {
        if r.gen_bool(0.1) {
            hum_dir = -hum_dir;
        }
        if r.gen_bool(0.1) {
            pres_dir = -pres_dir;
        }
        if hum > 85.0 {
            hum_dir = -1.0;
        } else if hum < 55.0 {
            hum_dir = 1.0;
        }
        if pres > 1012.0 {
            pres_dir = -1.0;
        } else if pres < 1000.0 {
            pres_dir = 1.0;
        }
        hum += hum_dir * 3.0 + r.gen_range(-0.3..0.3);
        pres += pres_dir * 1.2 + r.gen_range(-0.1..0.1);
        hums.push(hum);
        press.push(pres);
    }
    let rows: Vec<_> = (0..hours)
        .map(|t| {
            let mut rain = 0u8;
            if t >= 4 {
                rain = u8::from(hums[t - 1] > hums[t - 4] && press[t - 1] < press[t - 4]);
            }
            if r.gen_bool(0.05) {
                rain ^= 1;
            }
            let phase = t as f64 * std::f64::consts::TAU / 24.0;
            let temp = 27.0 + 3.0 * phase.sin() + r.gen_range(-0.1..0.1);
            let wind = 8.0 + 2.0 * phase.cos() + r.gen_range(-0.1..0.1);
            (start_time() + Duration::hours(t as i64), [temp, wind, hums[t], press[t]], rain)
        })
        .collect();
    indian_csv(&rows)
}

/// `n` normalized rows of `lookback` hours; the label is whether the last
/// hour's humidity exceeds 0.5, with a 0.1 margin on either side.
pub fn separable_fixture(lookback: usize, n: usize, seed: u64) -> WindowedDataset {
    let cfg = WindowConfig::new(lookback, 1);
    let mut r = rng(seed);
    let mut inputs = Vec::with_capacity(n * cfg.width());
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        for step in 0..lookback {
            let mut row: [f64; 5] = std::array::from_fn(|_| r.gen_range(0.0..1.0));
            row[4] = f64::from(r.gen_bool(0.3) as u8);
            if step == lookback - 1 {
                row[2] = if label == 1 { r.gen_range(0.6..1.0) } else { r.gen_range(0.0..0.4) };
            }
            inputs.extend_from_slice(&row);
        }
        targets.push(label);
    }
    WindowedDataset::from_parts(cfg, inputs, targets, Vec::new(), None).unwrap()
}

pub fn random_tensor(r: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-scale..scale)).collect()
}

/// Loss adapter for the gradient checker.
pub fn bce_head(out: &Tensor, y: f64) -> (f64, Tensor) {
    let (loss, dp) = bce_loss(out.data()[0], y);
    (loss, Tensor::filled(out.shape(), dp))
}

/// Gives every bias a random value so its gradient is exercised away from
/// the zero initialization.
pub fn randomize_biases(model: &mut Model, r: &mut ChaCha8Rng) {
    for layer in 0..model.layers().len() {
        for role in [ParamRole::Bias, ParamRole::GateBias, ParamRole::ReverseGateBias] {
            if let Some(p) = model.param_mut(layer, role) {
                p.values.iter_mut().for_each(|v| *v = r.gen_range(-0.5..0.5));
            }
        }
    }
}

/// Small layer stacks ending in a sigmoid unit, one family per `kind`.
pub fn gradient_instance(kind: usize, r: &mut ChaCha8Rng) -> (&'static str, Vec<usize>, Vec<LayerSpec>) {
    let dense = |input, output| LayerSpec::Dense { input, output, bias: true };
    let conv = |cin, cout, k, padding| LayerSpec::Conv1d { in_channels: cin, out_channels: cout, kernel_size: k, padding };
    let t = r.gen_range(4..9);
    let d = r.gen_range(1..4);
    let hdim = r.gen_range(2..5);
    match kind % 9 {
        0 => {
            let w = r.gen_range(2..8);
            ("dense", vec![d + 2], vec![dense(d + 2, w), LayerSpec::Relu, dense(w, 1), LayerSpec::Sigmoid])
        }
        1 | 2 => {
            let k = r.gen_range(1..4);
            let padding = if kind % 9 == 1 { Padding::Valid } else { Padding::Same };
            let name = if kind % 9 == 1 { "conv_valid" } else { "conv_same" };
            (
                name,
                vec![t, d],
                vec![conv(d, hdim, k, padding), LayerSpec::Relu, LayerSpec::GlobalAvgPool1d, dense(hdim, 1), LayerSpec::Sigmoid],
            )
        }
        3 => {
            let p = r.gen_range(2..4);
            (
                "series_maxpool",
                vec![t + 4, d],
                vec![
                    LayerSpec::ChannelSeries,
                    conv(1, hdim, 2, Padding::Valid),
                    LayerSpec::MaxPool1d { pool_size: p },
                    LayerSpec::GlobalAvgPool1d,
                    dense(hdim, 1),
                    LayerSpec::Sigmoid,
                ],
            )
        }
        4 => (
            "lstm",
            vec![t, d],
            vec![LayerSpec::Lstm { input: d, hidden: hdim, return_sequences: false }, dense(hdim, 1), LayerSpec::Sigmoid],
        ),
        5 => {
            let h2 = r.gen_range(2..4);
            (
                "lstm_stack",
                vec![t, d],
                vec![
                    LayerSpec::Lstm { input: d, hidden: hdim, return_sequences: true },
                    LayerSpec::Lstm { input: hdim, hidden: h2, return_sequences: false },
                    dense(h2, 1),
                    LayerSpec::Sigmoid,
                ],
            )
        }
        6 => {
            let h2 = r.gen_range(2..4);
            (
                "bilstm_stack",
                vec![t, d],
                vec![
                    LayerSpec::BiLstm { input: d, hidden: hdim, return_sequences: true },
                    LayerSpec::Lstm { input: 2 * hdim, hidden: h2, return_sequences: false },
                    dense(h2, 2),
                    LayerSpec::Relu,
                    dense(2, 1),
                    LayerSpec::Sigmoid,
                ],
            )
        }
        7 => (
            "bilstm_last",
            vec![t, d],
            vec![LayerSpec::BiLstm { input: d, hidden: hdim, return_sequences: false }, dense(2 * hdim, 1), LayerSpec::Sigmoid],
        ),
        _ => (
            "bilstm_conv_dropout",
            vec![t, d],
            vec![
                LayerSpec::BiLstm { input: d, hidden: hdim, return_sequences: true },
                conv(2 * hdim, 3, 2, Padding::Same),
                LayerSpec::Relu,
                LayerSpec::Dropout { rate: 0.4 },
                LayerSpec::GlobalAvgPool1d,
                dense(3, 1),
                LayerSpec::Sigmoid,
            ],
        ),
    }
}

/// `y[t][o] = b[o] + Σ_j Σ_c K[o][j][c] · xpad[t + j][c]`, summed in that
/// order.
#[allow(clippy::too_many_arguments)]
pub fn conv_reference(x: &[f64], len: usize, cin: usize, kernel: &[f64], bias: &[f64], k: usize, cout: usize, same: bool) -> Vec<f64> {
    let (left, right) = if same { ((k - 1) / 2, k - 1 - (k - 1) / 2) } else { (0, 0) };
    let padded_len = len + left + right;
    let at = |t: usize, c: usize| -> f64 {
        if t < left || t >= left + len {
            0.0
        } else {
            x[(t - left) * cin + c]
        }
    };
    let out_len = padded_len + 1 - k;
    let mut y = vec![0.0; out_len * cout];
    for t in 0..out_len {
        for o in 0..cout {
            let mut acc = 0.0;
            for j in 0..k {
                for c in 0..cin {
                    acc += kernel[(o * k + j) * cin + c] * at(t + j, c);
                }
            }
            y[t * cout + o] = bias[o] + acc;
        }
    }
    y
}

/// Unit-by-unit LSTM recurrence; gate rows `[i, f, g, o]` of `4H`.
pub fn lstm_reference(x: &[f64], steps: usize, d: usize, hidden: usize, w_ih: &[f64], w_hh: &[f64], b: &[f64]) -> Vec<f64> {
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut out = Vec::with_capacity(steps * hidden);
    for t in 0..steps {
        let xt = &x[t * d..(t + 1) * d];
        let pre = |row: usize| -> f64 {
            let mut z = b[row];
            for j in 0..d {
                z += w_ih[row * d + j] * xt[j];
            }
            for k in 0..hidden {
                z += w_hh[row * hidden + k] * h[k];
            }
            z
        };
        let mut h_new = vec![0.0; hidden];
        for u in 0..hidden {
            let i = sig(pre(u));
            let f = sig(pre(hidden + u));
            let g = pre(2 * hidden + u).tanh();
            let o = sig(pre(3 * hidden + u));
            c[u] = f * c[u] + i * g;
            h_new[u] = o * c[u].tanh();
        }
        h = h_new;
        out.extend_from_slice(&h);
    }
    out
}
