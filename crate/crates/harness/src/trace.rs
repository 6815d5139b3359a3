//! CSV output. Column sets and order are fixed; numbers carry 17 significant digits.

use std::io::Write;

use crate::error::Result;
use crate::sim::{Outcome, TraceRecord};

pub const TRACE_COLUMNS: [&str; 12] = [
    "t",
    "w",
    "g_norm",
    "g_tilde_norm",
    "g_clipped_norm",
    "h",
    "z",
    "alpha",
    "beta",
    "corrupted",
    "true_regret",
    "observed_regret",
];

pub const SUMMARY_COLUMNS: [&str; 18] = [
    "algorithm",
    "adversary",
    "k",
    "horizon",
    "seed",
    "true_regret",
    "observed_regret",
    "loss_regret",
    "error_term",
    "correction_term",
    "bias_term",
    "composite_term",
    "count_corrupted",
    "big_rounds",
    "deviation_sum",
    "max_w_norm",
    "rounds",
    "wall_time_s",
];

/// Widest iterate written coordinate by coordinate; larger ones are written as `||w||`.
pub const MAX_INLINE_DIM: usize = 3;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn iterate_field(r: &TraceRecord) -> String {
    if r.w.dim() <= MAX_INLINE_DIM {
        r.w.coords().iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
    } else {
        num(r.w.norm())
    }
}

pub fn write_trace<W: Write>(out: W, records: &[TraceRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(TRACE_COLUMNS)?;
    for r in records {
        wtr.write_record([
            r.t.to_string(),
            iterate_field(r),
            num(r.g_norm),
            num(r.g_tilde_norm),
            num(r.g_clipped_norm),
            opt(r.h),
            opt(r.z),
            num(r.alpha),
            num(r.beta),
            (r.corrupted as u8).to_string(),
            num(r.true_regret),
            num(r.observed_regret),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Identifies the run a summary row belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RunKey {
    pub algorithm: String,
    pub adversary: String,
    pub k: usize,
    pub horizon: usize,
    pub seed: u64,
}

pub fn summary_row(key: &RunKey, o: &Outcome) -> Vec<String> {
    let d = o.decomposition.clone().unwrap_or_default();
    let terms = if o.decomposition.is_some() {
        [d.error_term, d.correction_term, d.bias_term, d.composite_term].map(num)
    } else {
        Default::default()
    };
    let [error, correction, bias, composite] = terms;
    vec![
        key.algorithm.clone(),
        key.adversary.clone(),
        key.k.to_string(),
        key.horizon.to_string(),
        key.seed.to_string(),
        num(o.regret.true_regret_linear),
        num(o.regret.observed_regret_linear),
        num(o.regret.loss_regret),
        error,
        correction,
        bias,
        composite,
        o.corruption.count_corrupted.to_string(),
        o.corruption.big_rounds.to_string(),
        num(o.corruption.deviation_sum),
        num(o.max_w_norm),
        o.rounds.to_string(),
        format!("{:.6}", o.wall_time_s),
    ]
}

pub fn write_summary<W: Write>(out: W, rows: &[(RunKey, Outcome)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SUMMARY_COLUMNS)?;
    for (key, o) in rows {
        wtr.write_record(summary_row(key, o))?;
    }
    wtr.flush()?;
    Ok(())
}
