//! Gradient descent on the likelihood image itself, for checking that the
//! topological term moves the topology of the binarized iterate toward the
//! target.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::loss::{bce_loss_and_grad, evaluate, Evaluation, LossConfig};
use crate::matching::{CreatorReference, MatchMode};
use crate::metrics::betti_error;
use crate::raster::{binarize, BinaryMask, GrayImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TopoMode {
    Vanilla,
    Spatial,
    /// BCE only.
    None,
}

impl TopoMode {
    pub fn match_mode(self) -> Option<MatchMode> {
        match self {
            TopoMode::Vanilla => Some(MatchMode::Vanilla),
            TopoMode::Spatial => Some(MatchMode::Spatial),
            TopoMode::None => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub mode: TopoMode,
    pub clamp_eps: f64,
    pub record_every: usize,
    /// Seeds `init_noise`; nothing else is random.
    pub seed: u64,
    /// Amplitude of uniform noise added to the initial image.
    pub init_noise: f64,
    pub pad: bool,
    /// Binarization threshold for the Betti errors in the trace.
    pub threshold: f64,
    pub reference: CreatorReference,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            steps: 300,
            learning_rate: 0.5,
            lambda: 0.01,
            mode: TopoMode::Spatial,
            clamp_eps: 1e-3,
            record_every: 10,
            seed: 0,
            init_noise: 0.0,
            pad: true,
            threshold: 0.5,
            reference: CreatorReference::Determining,
        }
    }
}

impl DescentConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(self.lambda >= 0.0) {
            return bad("lambda must be >= 0");
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return bad("clamp_eps must lie in (0, 0.5)");
        }
        if self.record_every == 0 {
            return bad("record_every must be >= 1");
        }
        if !(0.0..0.5).contains(&self.init_noise) {
            return bad("init_noise must lie in [0, 0.5)");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub total: f64,
    pub pixel: f64,
    pub topo: f64,
    pub b0_err: f64,
    pub b1_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentTrace {
    /// Steps `0, k, 2k, …` and the final step.
    pub records: Vec<TraceRecord>,
    /// First step whose binarized iterate has zero β0 error, checked every step.
    pub first_zero_b0_step: Option<usize>,
    pub final_image: GrayImage,
}

impl DescentTrace {
    /// `step,total,pixel,topo,b0err,b1err`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "step,total,pixel,topo,b0err,b1err")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.step, r.total, r.pixel, r.topo, r.b0_err, r.b1_err
            )?;
        }
        Ok(())
    }
}

/// Runs `cfg.steps` updates `L ← clamp(L − lr·(∇pixel + λ∇topo), ε, 1 − ε)`.
///
/// Diagrams and matchings are recomputed every step. The initial image is
/// clamped the same way (after the optional seeded noise), so every
/// recorded iterate lies in `[ε, 1 − ε]`.
pub fn optimize_likelihood(l0: &GrayImage, t: &BinaryMask, cfg: &DescentConfig) -> Result<DescentTrace> {
    optimize_with_observer(l0, t, cfg, |_, _, _| {})
}

/// As [`optimize_likelihood`], calling `observer(step, iterate, evaluation)`
/// at every recorded step.
pub fn optimize_with_observer(
    l0: &GrayImage,
    t: &BinaryMask,
    cfg: &DescentConfig,
    mut observer: impl FnMut(usize, &GrayImage, Option<&Evaluation>),
) -> Result<DescentTrace> {
    cfg.validate()?;
    if l0.shape() != t.shape() {
        return Err(Error::ShapeMismatch {
            expected: l0.shape(),
            found: t.shape(),
        });
    }
    let (lo, hi) = (cfg.clamp_eps, 1.0 - cfg.clamp_eps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let amp = cfg.init_noise;
    let mut l = l0.map_clamped(lo, hi, |_, v| if amp > 0.0 { v + rng.gen_range(-amp..=amp) } else { v });

    let loss_cfg = cfg.mode.match_mode().map(|mode| LossConfig {
        mode,
        lambda: cfg.lambda,
        pad: cfg.pad,
        reference: cfg.reference,
        exec: Execution::Sequential,
    });

    let mut records = Vec::with_capacity(cfg.steps / cfg.record_every + 2);
    let mut first_zero_b0_step = None;
    for step in 0..=cfg.steps {
        let (b0_err, b1_err) = betti_error(&binarize(&l, cfg.threshold)?, t)?;
        if b0_err == 0.0 && first_zero_b0_step.is_none() {
            first_zero_b0_step = Some(step);
        }
        let record = step % cfg.record_every == 0 || step == cfg.steps;
        let last = step == cfg.steps;
        let topo_needed = loss_cfg.is_some() && (record || cfg.lambda > 0.0);
        if !record && last {
            break;
        }

        let eval = match (&loss_cfg, topo_needed) {
            (Some(lc), true) => Some(evaluate(&l, t, lc)?),
            _ => None,
        };
        let (pixel, pixel_grad) = match &eval {
            Some(e) => (e.report.pixel_loss, e.pixel_gradient.clone()),
            None => bce_loss_and_grad(&l, t)?,
        };
        if record {
            let topo = eval.as_ref().map_or(0.0, |e| e.report.topo_loss);
            let lambda = if loss_cfg.is_some() { cfg.lambda } else { 0.0 };
            records.push(TraceRecord {
                step,
                total: pixel + lambda * topo,
                pixel,
                topo,
                b0_err,
                b1_err,
            });
            observer(step, &l, eval.as_ref());
        }
        if last {
            break;
        }

        let lr = cfg.learning_rate;
        l = match (&eval, cfg.lambda > 0.0) {
            (Some(e), true) => {
                let topo = e.topo_gradient.values();
                let pix = pixel_grad.values();
                l.map_clamped(lo, hi, |i, v| v - lr * (pix[i] + cfg.lambda * topo[i]))
            }
            _ => {
                let pix = pixel_grad.values();
                l.map_clamped(lo, hi, |i, v| v - lr * pix[i])
            }
        };
    }

    Ok(DescentTrace {
        records,
        first_zero_b0_step,
        final_image: l,
    })
}

/// Independent runs over many instances, in input order.
pub fn optimize_many(
    instances: &[(GrayImage, BinaryMask)],
    cfg: &DescentConfig,
    exec: Execution,
) -> Vec<Result<DescentTrace>> {
    exec.map(instances, |(l0, t)| optimize_likelihood(l0, t, cfg))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    /// Two 4×4 squares; the likelihood is one blob covering both.
    TwoBlobs,
    /// A square annulus; the likelihood has a gap in it.
    Ring,
    /// A horizontal bar across the frame; the likelihood has a gap in it.
    BrokenLine,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-blobs" => Ok(SyntheticKind::TwoBlobs),
            "ring" => Ok(SyntheticKind::Ring),
            "broken-line" => Ok(SyntheticKind::BrokenLine),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub rows: usize,
    pub cols: usize,
    /// Amplitude of the uniform noise, in `[0, 0.5)`.
    pub noise: f64,
    /// Gaussian blur sigma in pixels; 0 disables blurring.
    pub blur: f64,
    /// Value written into the topological defect (bridge or gap) before
    /// blurring; `None` leaves the likelihood source equal to the target.
    pub defect: Option<f64>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, rows: usize, cols: usize, noise: f64, seed: u64) -> Self {
        let defect = match kind {
            SyntheticKind::TwoBlobs => 1.0,
            SyntheticKind::Ring | SyntheticKind::BrokenLine => 0.2,
        };
        SyntheticSpec {
            kind,
            rows,
            cols,
            noise,
            blur: 1.0,
            defect: Some(defect),
            seed,
        }
    }
}

/// Target mask of the named topology and a corrupted likelihood
/// (defect, then Gaussian blur, then uniform noise, clamped to `[0, 1]`).
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn make_synthetic_instance(spec: &SyntheticSpec) -> Result<(GrayImage, BinaryMask)> {
    let (rows, cols) = (spec.rows, spec.cols);
    if rows < 16 || cols < 16 {
        return Err(Error::InvalidArgument(format!(
            "synthetic shape {rows}x{cols} is below 16x16"
        )));
    }
    if !(0.0..0.5).contains(&spec.noise) {
        return Err(Error::InvalidArgument(format!(
            "noise {} must lie in [0, 0.5)",
            spec.noise
        )));
    }
    if !(spec.blur >= 0.0) {
        return Err(Error::InvalidArgument("blur must be >= 0".into()));
    }
    let (cr, cc) = (rows / 2, cols / 2);
    let in_range = |x: usize, lo: usize, hi: usize| x >= lo && x < hi;

    // (target predicate, defect predicate)
    type Region = Box<dyn Fn(usize, usize) -> bool>;
    let (target, defect): (Region, Region) = match spec.kind {
        SyntheticKind::TwoBlobs => {
            let (r0, r1) = (cr - 2, cr + 2);
            let (a0, a1, b0, b1) = (cc - 6, cc - 2, cc + 2, cc + 6);
            (
                Box::new(move |r, c| in_range(r, r0, r1) && (in_range(c, a0, a1) || in_range(c, b0, b1))),
                Box::new(move |r, c| in_range(r, r0, r1) && in_range(c, a1, b0)),
            )
        }
        SyntheticKind::Ring => {
            let (ho, wo) = (rows / 4, cols / 4);
            let outer = move |r: usize, c: usize| in_range(r, cr - ho, cr + ho) && in_range(c, cc - wo, cc + wo);
            let inner = move |r: usize, c: usize| {
                in_range(r, cr - ho + 2, cr + ho - 2) && in_range(c, cc - wo + 2, cc + wo - 2)
            };
            (
                Box::new(move |r, c| outer(r, c) && !inner(r, c)),
                Box::new(move |r, c| in_range(r, cr - ho, cr - ho + 2) && in_range(c, cc - 1, cc + 1)),
            )
        }
        SyntheticKind::BrokenLine => (
            Box::new(move |r, _| in_range(r, cr - 1, cr + 1)),
            Box::new(move |r, c| in_range(r, cr - 1, cr + 1) && in_range(c, cc - 1, cc + 1)),
        ),
    };

    let t = BinaryMask::from_fn(rows, cols, &target)?;
    let mut source: Vec<f64> = (0..rows * cols)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            match spec.defect {
                Some(v) if defect(r, c) => v,
                _ if target(r, c) => 1.0,
                _ => 0.0,
            }
        })
        .collect();
    if spec.blur > 0.0 {
        source = gaussian_blur(&source, rows, cols, spec.blur);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = spec.noise;
    let l = GrayImage::from_fn(rows, cols, |r, c| {
        let n = if noise > 0.0 {
            rng.gen_range(-noise..=noise)
        } else {
            0.0
        };
        source[r * cols + c] + n
    })?;
    Ok((l, t))
}

/// Separable Gaussian blur with clamp-to-edge borders.
fn gaussian_blur(src: &[f64], rows: usize, cols: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= sum);

    let clamp = |x: isize, n: usize| x.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; src.len()];
    for r in 0..rows {
        for c in 0..cols {
            tmp[r * cols + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * src[r * cols + clamp(c as isize + k as isize - radius, cols)])
                .sum();
        }
    }
    let mut out = vec![0.0; src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[clamp(r as isize + k as isize - radius, rows) * cols + c])
                .sum();
        }
    }
    out
}
