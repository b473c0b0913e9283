//! Result serialization: canonical floats and the CSV/JSON emitters.
//!
//! Computed result floats are written with 9 significant digits via [`g9`]
//! (fixed notation between 1e-4 and 1e9, scientific outside, trailing zeros
//! trimmed). Config echoes keep full shortest-round-trip precision instead,
//! so a manifest re-fed as a config reproduces its run exactly.

use qloc_core::harness::{CdfPoint, TxRecord};

/// Formats a float with 9 significant digits.
///
/// Zero prints as `0`; magnitudes in [1e-4, 1e9) print fixed, others
/// scientific (`1.5e-7`); trailing zeros and a trailing decimal point are
/// trimmed, so the output is also valid JSON.
pub fn g9(x: f64) -> String {
    if !x.is_finite() {
        return String::from(if x.is_nan() {
            "nan"
        } else if x > 0.0 {
            "inf"
        } else {
            "-inf"
        });
    }
    if x == 0.0 {
        return String::from("0");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation has an exponent");
    let exp: i32 = exp.parse().expect("scientific exponent is an integer");
    if (-4..9).contains(&exp) {
        trim_zeros(format!("{x:.*}", (8 - exp) as usize))
    } else {
        format!("{}e{exp}", trim_zeros(String::from(mantissa)))
    }
}

/// Drops trailing fractional zeros (and a bare trailing point).
fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// JSON string literal (quotes included).
pub fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// The per-transmitter records table.
///
/// Columns: true position, predicted position, error, true/predicted cell,
/// the block containing the transmitter (`coarse_block`), and the block of
/// the prediction.
pub fn records_csv(records: &[TxRecord]) -> String {
    let mut out =
        String::from("tx_x,tx_y,pred_x,pred_y,l_err,true_cell,pred_cell,coarse_block,pred_block\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            g9(r.tx.x),
            g9(r.tx.y),
            g9(r.predicted.x),
            g9(r.predicted.y),
            g9(r.l_err),
            r.true_cell,
            r.pred_cell,
            r.true_block,
            r.pred_block,
        ));
    }
    out
}

/// The empirical error CDF table.
pub fn cdf_csv(cdf: &[CdfPoint]) -> String {
    let mut out = String::from("l_err,cum_prob\n");
    for p in cdf {
        out.push_str(&format!("{},{}\n", g9(p.l_err), g9(p.cum_prob)));
    }
    out
}

/// One aggregate row of a sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub grid_n: usize,
    pub sensors: usize,
    pub scheme: String,
    pub setting: String,
    pub variant: String,
    pub records: usize,
    pub mean_l_err: f64,
    pub cc_acc: f64,
}

/// The sweep aggregate table, one row per (axis value, scheme) combination
/// in run order.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("grid_n,sensors,scheme,setting,variant,records,mean_l_err,cc_acc\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.grid_n,
            r.sensors,
            r.scheme,
            r.setting,
            r.variant,
            r.records,
            g9(r.mean_l_err),
            g9(r.cc_acc),
        ));
    }
    out
}
