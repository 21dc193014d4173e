use std::fmt::Write as _;

use super::metrics::Metrics;

pub const TRAIN_LOG_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub test: Metrics,
    pub stopped_early: bool,
}

impl TrainLog {
    /// Curve file. Wall-clock is left out so equal runs give equal bytes;
    /// see [`TrainLog::timing_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAIN_LOG_HEADER);
        out.push('\n');
        for r in &self.epochs {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch,
                format_sig(r.train_loss),
                format_sig(r.train_accuracy),
                format_sig(r.val_loss),
                format_sig(r.val_accuracy)
            )
            .unwrap();
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("epoch,wall_clock_secs\n");
        for r in &self.epochs {
            writeln!(out, "{},{:.3}", r.epoch, r.wall_clock_secs).unwrap();
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.epochs
            .iter()
            .all(|r| [r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy].iter().all(|v| v.is_finite()))
    }
}

/// Six significant digits, `%g` style: fixed notation for exponents in
/// `[-5, 6)`, scientific otherwise, trailing zeros trimmed.
pub fn format_sig(v: f64) -> String {
    const DIGITS: i32 = 6;
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    // round first so 9.999995 moves to the next decade
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
