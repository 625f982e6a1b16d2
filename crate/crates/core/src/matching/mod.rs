//! Optimal matching of persistence diagrams, per dimension.
//!
//! Each dimension is an assignment problem over the diagram points of `L`
//! and `T`, augmented with diagonal slots on both sides: a point sent to the
//! diagonal pays its squared distance to its projection `(b − d)² / 2`, and
//! diagonal-to-diagonal is free. Real matches pay the squared diagram
//! distance, multiplied in spatial mode by the floored squared distance
//! between the two creators' normalized pixel locations.

mod export;
pub mod hungarian;

pub use export::{matching_json, overlay_svg};

use serde::{Serialize, Serializer};

use crate::cubical::Pixel;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::persistence::{Diagram, PersistencePair};

/// Lower bound applied to the spatial weight of a real match.
pub const SPATIAL_WEIGHT_FLOOR: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Vanilla,
    Spatial,
}

/// Which corner pixel of a creator cell locates a feature in the image.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CreatorReference {
    /// The corner whose value equals the creator's filtration value.
    #[default]
    Determining,
    /// The corner with the largest value.
    Peak,
}

impl CreatorReference {
    pub fn pixel(self, pair: &PersistencePair) -> Pixel {
        match self {
            CreatorReference::Determining => pair.creator.pixel,
            CreatorReference::Peak => pair.creator_peak,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatchTarget {
    /// Index into the `T` pairs of the same dimension.
    Feature(usize),
    Diagonal,
}

impl Serialize for MatchTarget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MatchTarget::Feature(i) => s.serialize_u64(*i as u64),
            MatchTarget::Diagonal => s.serialize_str("diagonal"),
        }
    }
}

/// Creator location normalized to `[0, 1)`: `(row / rows, col / cols)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CreatorLocator {
    pub y: f64,
    pub x: f64,
}

impl CreatorLocator {
    pub fn new(pixel: Pixel, shape: (usize, usize)) -> Self {
        CreatorLocator {
            y: pixel.row as f64 / shape.0 as f64,
            x: pixel.col as f64 / shape.1 as f64,
        }
    }

    pub fn of(pair: &PersistencePair, shape: (usize, usize), reference: CreatorReference) -> Self {
        Self::new(reference.pixel(pair), shape)
    }

    /// Floored squared Euclidean distance to `other`.
    pub fn weight_to(self, other: CreatorLocator) -> f64 {
        let (dy, dx) = (self.y - other.y, self.x - other.x);
        (dy * dy + dx * dx).max(SPATIAL_WEIGHT_FLOOR)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchedPair {
    pub l_index: usize,
    pub target: MatchTarget,
    #[serde(rename = "s")]
    pub spatial_weight: f64,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnmatchedTruth {
    pub t_index: usize,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimMatching {
    pub dim: u8,
    /// One entry per `L` pair, in `L` order.
    pub pairs: Vec<MatchedPair>,
    /// `T` pairs left for the diagonal, in `T` order.
    pub unmatched_truth: Vec<UnmatchedTruth>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchingResult {
    pub mode: MatchMode,
    pub dims: Vec<DimMatching>,
    pub total_cost: f64,
}

impl MatchingResult {
    pub fn dim(&self, dim: u8) -> &DimMatching {
        &self.dims[dim as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchOptions {
    pub mode: MatchMode,
    pub reference: CreatorReference,
    pub exec: Execution,
}

impl MatchOptions {
    pub fn new(mode: MatchMode) -> Self {
        MatchOptions {
            mode,
            reference: CreatorReference::default(),
            exec: Execution::default(),
        }
    }
}

/// `(b_p − b_t)² + (d_p − d_t)²`.
pub fn diagram_distance_sq(p: &PersistencePair, t: &PersistencePair) -> Result<f64> {
    if p.dim != t.dim {
        return Err(Error::DimensionMismatch(p.dim, t.dim));
    }
    Ok(distance_sq(p, t))
}

#[inline]
fn distance_sq(p: &PersistencePair, t: &PersistencePair) -> f64 {
    let (db, dd) = (p.birth - t.birth, p.death - t.death);
    db * db + dd * dd
}

/// Squared distance from a point to its diagonal projection, `(b − d)² / 2`.
pub fn diagonal_distance_sq(p: &PersistencePair) -> f64 {
    let h = p.birth - p.death;
    h * h / 2.0
}

/// Floored squared distance between the normalized creator locations.
pub fn spatial_weight(p: &PersistencePair, t: &PersistencePair, shape: (usize, usize)) -> f64 {
    spatial_weight_with(p, t, shape, CreatorReference::default())
}

pub fn spatial_weight_with(
    p: &PersistencePair,
    t: &PersistencePair,
    shape: (usize, usize),
    reference: CreatorReference,
) -> f64 {
    CreatorLocator::of(p, shape, reference).weight_to(CreatorLocator::of(t, shape, reference))
}

/// Real-to-real costs, row-major `l.len() × t.len()`, with the weights used.
pub fn cost_matrix(
    l: &[PersistencePair],
    t: &[PersistencePair],
    shape: (usize, usize),
    mode: MatchMode,
    reference: CreatorReference,
) -> (Vec<f64>, Vec<f64>) {
    let mut costs = Vec::with_capacity(l.len() * t.len());
    let mut weights = Vec::with_capacity(l.len() * t.len());
    let t_loc: Vec<CreatorLocator> = t.iter().map(|q| CreatorLocator::of(q, shape, reference)).collect();
    for p in l {
        let p_loc = CreatorLocator::of(p, shape, reference);
        for (q, &q_loc) in t.iter().zip(&t_loc) {
            let w = match mode {
                MatchMode::Vanilla => 1.0,
                MatchMode::Spatial => p_loc.weight_to(q_loc),
            };
            costs.push(distance_sq(p, q) * w);
            weights.push(w);
        }
    }
    (costs, weights)
}

/// Optimal matching of one dimension's pairs.
pub fn match_pairs(
    dim: u8,
    l: &[PersistencePair],
    t: &[PersistencePair],
    shape: (usize, usize),
    mode: MatchMode,
    reference: CreatorReference,
) -> DimMatching {
    let (nl, nt) = (l.len(), t.len());
    let (costs, weights) = cost_matrix(l, t, shape, mode, reference);
    let diag_l: Vec<f64> = l.iter().map(diagonal_distance_sq).collect();
    let diag_t: Vec<f64> = t.iter().map(diagonal_distance_sq).collect();

    // rows: L pairs then one diagonal slot per T pair;
    // cols: T pairs then one diagonal slot per L pair
    let assignment = hungarian::solve(nl + nt, |i, j| match (i < nl, j < nt) {
        (true, true) => costs[i * nt + j],
        (true, false) => diag_l[i],
        (false, true) => diag_t[j],
        (false, false) => 0.0,
    });

    let mut matched_t = vec![false; nt];
    let pairs: Vec<MatchedPair> = (0..nl)
        .map(|i| {
            let j = assignment[i];
            if j < nt {
                matched_t[j] = true;
                MatchedPair {
                    l_index: i,
                    target: MatchTarget::Feature(j),
                    spatial_weight: weights[i * nt + j],
                    cost: costs[i * nt + j],
                }
            } else {
                MatchedPair {
                    l_index: i,
                    target: MatchTarget::Diagonal,
                    spatial_weight: 1.0,
                    cost: diag_l[i],
                }
            }
        })
        .collect();
    let unmatched_truth: Vec<UnmatchedTruth> = (0..nt)
        .filter(|&j| !matched_t[j])
        .map(|j| UnmatchedTruth {
            t_index: j,
            cost: diag_t[j],
        })
        .collect();
    let cost = pairs.iter().map(|p| p.cost).sum::<f64>() + unmatched_truth.iter().map(|u| u.cost).sum::<f64>();
    DimMatching {
        dim,
        pairs,
        unmatched_truth,
        cost,
    }
}

pub fn match_diagrams(dl: &Diagram, dt: &Diagram, mode: MatchMode) -> Result<MatchingResult> {
    match_diagrams_with(dl, dt, &MatchOptions::new(mode))
}

/// Matches dimensions 0 and 1 independently and sums their costs.
pub fn match_diagrams_with(dl: &Diagram, dt: &Diagram, opts: &MatchOptions) -> Result<MatchingResult> {
    if dl.shape() != dt.shape() {
        return Err(Error::ShapeMismatch {
            expected: dl.shape(),
            found: dt.shape(),
        });
    }
    let shape = dl.shape();
    let run = |dim: u8| match_pairs(dim, dl.pairs(dim), dt.pairs(dim), shape, opts.mode, opts.reference);
    let (d0, d1) = opts.exec.join(|| run(0), || run(1));
    Ok(MatchingResult {
        mode: opts.mode,
        total_cost: d0.cost + d1.cost,
        dims: vec![d0, d1],
    })
}
