//! Segmentation metrics: Betti errors, pixel accuracy, Dice and clDice.
//!
//! clDice uses [`skeleton::skeletonize`] (Zhang–Suen), so its values are only
//! comparable with other numbers produced by this crate.

pub mod skeleton;

use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::persistence::betti_numbers;
use crate::raster::BinaryMask;
use crate::JSON_SCHEMA_VERSION;

/// Means over patches.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub dice: f64,
    pub cldice: f64,
    pub betti0_err: f64,
    pub betti1_err: f64,
    pub n_patches: usize,
}

fn same_shape(p: &BinaryMask, t: &BinaryMask) -> Result<()> {
    if p.shape() != t.shape() {
        return Err(Error::ShapeMismatch {
            expected: t.shape(),
            found: p.shape(),
        });
    }
    Ok(())
}

/// `(|β0(P) − β0(T)|, |β1(P) − β1(T)|)`.
pub fn betti_error(p: &BinaryMask, t: &BinaryMask) -> Result<(f64, f64)> {
    same_shape(p, t)?;
    let (p0, p1) = betti_numbers(p);
    let (t0, t1) = betti_numbers(t);
    Ok((p0.abs_diff(t0) as f64, p1.abs_diff(t1) as f64))
}

/// `(dice, accuracy)`; Dice is 1 when both masks are empty.
pub fn dice_and_accuracy(p: &BinaryMask, t: &BinaryMask) -> Result<(f64, f64)> {
    same_shape(p, t)?;
    let (mut inter, mut np, mut nt, mut agree) = (0usize, 0usize, 0usize, 0usize);
    for (&a, &b) in p.bits().iter().zip(t.bits()) {
        inter += (a && b) as usize;
        np += a as usize;
        nt += b as usize;
        agree += (a == b) as usize;
    }
    let dice = if np + nt == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (np + nt) as f64
    };
    Ok((dice, agree as f64 / p.bits().len() as f64))
}

fn overlap_ratio(skeleton: &BinaryMask, other: &BinaryMask) -> Option<f64> {
    let size = skeleton.count_ones();
    if size == 0 {
        return None;
    }
    let hits = skeleton
        .bits()
        .iter()
        .zip(other.bits())
        .filter(|(&s, &o)| s && o)
        .count();
    Some(hits as f64 / size as f64)
}

/// Harmonic mean of topology precision `|S(P) ∩ T| / |S(P)|` and topology
/// sensitivity `|S(T) ∩ P| / |S(T)|`. 1 when both masks are empty, 0 when
/// only one is or a ratio is undefined.
pub fn cl_dice(p: &BinaryMask, t: &BinaryMask) -> Result<f64> {
    same_shape(p, t)?;
    match (p.is_all_zero(), t.is_all_zero()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let (sp, st) = (skeleton::skeletonize(p), skeleton::skeletonize(t));
    let (Some(tprec), Some(tsens)) = (overlap_ratio(&sp, t), overlap_ratio(&st, p)) else {
        return Ok(0.0);
    };
    if tprec + tsens == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * tprec * tsens / (tprec + tsens))
}

/// Metrics of a single `(P, T)` patch.
pub fn evaluate_pair(p: &BinaryMask, t: &BinaryMask) -> Result<MetricReport> {
    let (betti0_err, betti1_err) = betti_error(p, t)?;
    let (dice, accuracy) = dice_and_accuracy(p, t)?;
    Ok(MetricReport {
        accuracy,
        dice,
        cldice: cl_dice(p, t)?,
        betti0_err,
        betti1_err,
        n_patches: 1,
    })
}

/// Arithmetic mean of per-patch metrics.
pub fn evaluate_batch(pairs: &[(BinaryMask, BinaryMask)], exec: Execution) -> Result<MetricReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let per_patch = exec
        .map(pairs, |(p, t)| evaluate_pair(p, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = per_patch.len() as f64;
    let mean = |f: fn(&MetricReport) -> f64| per_patch.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        accuracy: mean(|m| m.accuracy),
        dice: mean(|m| m.dice),
        cldice: mean(|m| m.cldice),
        betti0_err: mean(|m| m.betti0_err),
        betti1_err: mean(|m| m.betti1_err),
        n_patches: per_patch.len(),
    })
}

impl MetricReport {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": JSON_SCHEMA_VERSION,
            "accuracy": self.accuracy,
            "dice": self.dice,
            "cldice": self.cldice,
            "betti0_err": self.betti0_err,
            "betti1_err": self.betti1_err,
            "n_patches": self.n_patches,
        })
    }

    /// Aligned table; overlap scores in percent.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>8}  {:>8}  {:>8}  {:>8}  {:>8}  {:>9}",
            "Accuracy", "Dice", "clDice", "Betti0", "Betti1", "patches"
        );
        let _ = writeln!(
            s,
            "{:>8.2}  {:>8.2}  {:>8.2}  {:>8.3}  {:>8.3}  {:>9}",
            100.0 * self.accuracy,
            100.0 * self.dice,
            100.0 * self.cldice,
            self.betti0_err,
            self.betti1_err,
            self.n_patches
        );
        s
    }
}
