//! Spatial-aware topological loss, its surrogate gradient and the BCE pixel loss.
//!
//! For every pair `p` of the likelihood diagram with optimal target `η(p)`,
//! the topological loss adds `s_p · ([b(p) − b(η)]² + [d(p) − d(η)]²)`. A
//! diagonal target sits at the midpoint `(b + d) / 2` for both coordinates
//! and carries weight 1. The gradient lands only on the determining pixels
//! of the creator and destroyer cells; the midpoint is held constant, which
//! gives the same values as differentiating through it.

use serde::Serialize;
use serde_json::{json, Value};

use crate::cubical::Pixel;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matching::{match_diagrams_with, CreatorReference, MatchMode, MatchOptions, MatchTarget, MatchingResult};
use crate::persistence::{diagram_of_image, Diagram, PersistencePair};
use crate::raster::{BinaryMask, GrayImage};
use crate::JSON_SCHEMA_VERSION;

/// Clamp applied to likelihoods before taking logs in the BCE loss.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    pub mode: MatchMode,
    pub lambda: f64,
    /// Pad both images with a ring of ones before computing diagrams.
    pub pad: bool,
    pub reference: CreatorReference,
    pub exec: Execution,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            mode: MatchMode::Spatial,
            lambda: 0.01,
            pad: true,
            reference: CreatorReference::Determining,
            exec: Execution::default(),
        }
    }
}

impl LossConfig {
    pub fn with_mode(mode: MatchMode) -> Self {
        LossConfig {
            mode,
            ..Self::default()
        }
    }
}

/// Per-pixel real values with the shape of the likelihood image.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientImage {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl GradientImage {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        GradientImage {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn add(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.cols + col] += v;
    }

    /// Pixels with a nonzero value, in row-major order.
    pub fn support(&self) -> Vec<Pixel> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| Pixel::new(i / self.cols, i % self.cols))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairContribution {
    pub dim: u8,
    pub l_index: usize,
    pub target: MatchTarget,
    pub s: f64,
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnmatchedTruthEntry {
    pub dim: u8,
    pub t_index: usize,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossReport {
    pub mode: MatchMode,
    /// Topological loss of dimensions 0 and 1.
    pub topo_by_dim: [f64; 2],
    pub topo_loss: f64,
    pub pixel_loss: f64,
    pub lambda: f64,
    pub total: f64,
    pub contributions: Vec<PairContribution>,
    /// Ground-truth features left on the diagonal; they shape the matching
    /// but add nothing to the loss.
    pub unmatched_truth: Vec<UnmatchedTruthEntry>,
}

/// Everything computed on the way to a loss value.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub diagram_l: Diagram,
    pub diagram_t: Diagram,
    pub matching: MatchingResult,
    pub report: LossReport,
    pub topo_gradient: GradientImage,
    pub pixel_gradient: GradientImage,
}

impl Evaluation {
    /// `∇pixel + λ ∇topo`.
    pub fn total_gradient(&self) -> GradientImage {
        let lambda = self.report.lambda;
        let mut g = self.pixel_gradient.clone();
        for (a, b) in g.values.iter_mut().zip(&self.topo_gradient.values) {
            *a += lambda * b;
        }
        g
    }
}

fn target_values(p: &PersistencePair, target: MatchTarget, t: &[PersistencePair]) -> (f64, f64) {
    match target {
        MatchTarget::Feature(j) => (t[j].birth, t[j].death),
        MatchTarget::Diagonal => {
            let mid = 0.5 * (p.birth + p.death);
            (mid, mid)
        }
    }
}

/// Per-pair contributions `s · (Δb² + Δd²)` for a fixed matching.
pub fn contributions(dl: &Diagram, dt: &Diagram, matching: &MatchingResult) -> Vec<PairContribution> {
    let mut out = Vec::with_capacity(dl.len());
    for dm in &matching.dims {
        let (l, t) = (dl.pairs(dm.dim), dt.pairs(dm.dim));
        for mp in &dm.pairs {
            let p = &l[mp.l_index];
            let (bt, dt_) = target_values(p, mp.target, t);
            let (db, dd) = (p.birth - bt, p.death - dt_);
            out.push(PairContribution {
                dim: dm.dim,
                l_index: mp.l_index,
                target: mp.target,
                s: mp.spatial_weight,
                contribution: mp.spatial_weight * (db * db + dd * dd),
            });
        }
    }
    out
}

/// Topological loss for a fixed matching.
pub fn topo_loss_with_matching(dl: &Diagram, dt: &Diagram, matching: &MatchingResult) -> f64 {
    contributions(dl, dt, matching).iter().map(|c| c.contribution).sum()
}

/// Gradient of the topological loss for a fixed matching, mapped back to an
/// image of shape `out_shape`. With `pad` the diagrams are in padded
/// coordinates and anything landing on the ring is dropped.
pub fn topo_gradient_with_matching(
    dl: &Diagram,
    dt: &Diagram,
    matching: &MatchingResult,
    out_shape: (usize, usize),
    pad: bool,
) -> GradientImage {
    let mut grad = GradientImage::zeros(out_shape.0, out_shape.1);
    let offset = pad as usize;
    let mut deposit = |px: Pixel, v: f64| {
        if pad && (px.row == 0 || px.col == 0) {
            return;
        }
        let (r, c) = (px.row - offset, px.col - offset);
        if r < out_shape.0 && c < out_shape.1 {
            grad.add(r, c, v);
        }
    };
    for dm in &matching.dims {
        let (l, t) = (dl.pairs(dm.dim), dt.pairs(dm.dim));
        for mp in &dm.pairs {
            let p = &l[mp.l_index];
            let (bt, dt_) = target_values(p, mp.target, t);
            let s = mp.spatial_weight;
            // p.birth and p.death equal L at the determining pixels
            deposit(p.creator.pixel, 2.0 * s * (p.birth - bt));
            if let Some(d) = p.destroyer {
                deposit(d.pixel, 2.0 * s * (p.death - dt_));
            }
        }
    }
    grad
}

fn check_shapes(l: &GrayImage, t: &BinaryMask) -> Result<()> {
    if l.shape() != t.shape() {
        return Err(Error::ShapeMismatch {
            expected: l.shape(),
            found: t.shape(),
        });
    }
    Ok(())
}

/// Mean binary cross-entropy and its per-pixel gradient `(l − t) / (l (1 − l)) / N`,
/// with `l` clamped into `[BCE_EPS, 1 − BCE_EPS]`.
pub fn bce_loss_and_grad(l: &GrayImage, t: &BinaryMask) -> Result<(f64, GradientImage)> {
    check_shapes(l, t)?;
    let n = l.len() as f64;
    let (rows, cols) = l.shape();
    let mut grad = GradientImage::zeros(rows, cols);
    let mut total = 0.0;
    for (i, (&v, &bit)) in l.values().iter().zip(t.bits()).enumerate() {
        let p = v.clamp(BCE_EPS, 1.0 - BCE_EPS);
        let y = if bit { 1.0 } else { 0.0 };
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        grad.values[i] = (p - y) / (p * (1.0 - p)) / n;
    }
    Ok((total / n, grad))
}

/// Full evaluation: diagrams, matching, loss report and both gradients.
pub fn evaluate(l: &GrayImage, t: &BinaryMask, cfg: &LossConfig) -> Result<Evaluation> {
    check_shapes(l, t)?;
    if cfg.lambda.is_nan() || cfg.lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {}",
            cfg.lambda
        )));
    }
    let t_gray = t.to_gray();
    let (diagram_l, diagram_t) = cfg
        .exec
        .join(|| diagram_of_image(l, cfg.pad), || diagram_of_image(&t_gray, cfg.pad));
    let opts = MatchOptions {
        mode: cfg.mode,
        reference: cfg.reference,
        exec: cfg.exec,
    };
    let matching = match_diagrams_with(&diagram_l, &diagram_t, &opts)?;

    let contributions = contributions(&diagram_l, &diagram_t, &matching);
    let mut topo_by_dim = [0.0; 2];
    for c in &contributions {
        topo_by_dim[c.dim as usize] += c.contribution;
    }
    let topo_loss = topo_by_dim[0] + topo_by_dim[1];
    let (pixel_loss, pixel_gradient) = bce_loss_and_grad(l, t)?;
    let topo_gradient = topo_gradient_with_matching(&diagram_l, &diagram_t, &matching, l.shape(), cfg.pad);
    let unmatched_truth = matching
        .dims
        .iter()
        .flat_map(|dm| {
            dm.unmatched_truth.iter().map(move |u| UnmatchedTruthEntry {
                dim: dm.dim,
                t_index: u.t_index,
                cost: u.cost,
            })
        })
        .collect();

    let report = LossReport {
        mode: cfg.mode,
        topo_by_dim,
        topo_loss,
        pixel_loss,
        lambda: cfg.lambda,
        total: pixel_loss + cfg.lambda * topo_loss,
        contributions,
        unmatched_truth,
    };
    Ok(Evaluation {
        diagram_l,
        diagram_t,
        matching,
        report,
        topo_gradient,
        pixel_gradient,
    })
}

pub fn sat_loss(l: &GrayImage, t: &BinaryMask, cfg: &LossConfig) -> Result<LossReport> {
    evaluate(l, t, cfg).map(|e| e.report)
}

/// `∂L_topo / ∂pixel`.
pub fn sat_gradient(l: &GrayImage, t: &BinaryMask, cfg: &LossConfig) -> Result<GradientImage> {
    evaluate(l, t, cfg).map(|e| e.topo_gradient)
}

/// Loss evaluation over many `(L, T)` pairs, in input order.
pub fn evaluate_batch(items: &[(GrayImage, BinaryMask)], cfg: &LossConfig) -> Vec<Result<Evaluation>> {
    // inner work stays sequential; the batch is the parallel axis
    let inner = LossConfig {
        exec: Execution::Sequential,
        ..*cfg
    };
    cfg.exec.map(items, |(l, t)| evaluate(l, t, &inner))
}

pub fn loss_report_json(report: &LossReport) -> Value {
    json!({
        "schema": JSON_SCHEMA_VERSION,
        "mode": report.mode,
        "lambda": report.lambda,
        "pixel_loss": report.pixel_loss,
        "topo_loss": report.topo_loss,
        "topo_loss_dim0": report.topo_by_dim[0],
        "topo_loss_dim1": report.topo_by_dim[1],
        "total": report.total,
        "contributions": report.contributions,
        "unmatched_truth": report.unmatched_truth,
    })
}
