//! 0- and 1-dimensional persistence of a super-level cubical filtration.
//!
//! Dimension 0 runs union-find over pixels and edges in filtration order,
//! applying the elder rule: on a merge the component born later (lower birth
//! value, or later in the total order on ties) dies, and the merging edge is
//! its destroyer.
//!
//! Dimension 1 uses the planar dual: walking the filtration backwards,
//! squares are dual vertices, edges are dual edges and the region outside
//! the grid is a single eldest vertex. When an edge joins two dual
//! components, the younger one (whose first square in the backward walk is
//! earliest in the forward order) dies. That edge creates a loop in the
//! forward filtration and that square fills it. Both passes are linear after
//! the sort, so the sort dominates at `O(n log n)`.

mod export;
mod union_find;

pub use export::{barcode_svg, write_diagram_csv};

use serde::Serialize;

use crate::cubical::{build_complex, CellId, FilteredComplex, Pixel};
use crate::exec::Execution;
use crate::raster::{pad_border, BinaryMask, GrayImage};
use union_find::UnionFind;

/// Death value assigned to the essential component.
pub const ESSENTIAL_DEATH: f64 = 0.0;

/// Value used for the one-pixel ring added before persistence.
pub const PAD_VALUE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CriticalCell {
    pub cell: CellId,
    /// Corner pixel whose value equals the cell's filtration value.
    pub pixel: Pixel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PersistencePair {
    pub dim: u8,
    pub birth: f64,
    pub death: f64,
    pub creator: CriticalCell,
    /// Corner of the creator with the largest value.
    pub creator_peak: Pixel,
    /// `None` for the essential component.
    pub destroyer: Option<CriticalCell>,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.destroyer.is_none()
    }

    pub fn persistence(&self) -> f64 {
        self.birth - self.death
    }

    /// Diagram coordinates `(1 − birth, 1 − death)`.
    pub fn plot_coords(&self) -> (f64, f64) {
        (1.0 - self.birth, 1.0 - self.death)
    }

    /// Alive at threshold `t` means `birth >= t > death`.
    pub fn alive_at(&self, t: f64) -> bool {
        self.birth >= t && t > self.death
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagram {
    rows: usize,
    cols: usize,
    pairs: [Vec<PersistencePair>; 2],
}

impl Diagram {
    pub fn new(rows: usize, cols: usize, dim0: Vec<PersistencePair>, dim1: Vec<PersistencePair>) -> Self {
        debug_assert!(dim0.iter().all(|p| p.dim == 0) && dim1.iter().all(|p| p.dim == 1));
        Diagram {
            rows,
            cols,
            pairs: [dim0, dim1],
        }
    }

    /// Shape of the image the diagram was computed on (padded if padding was used).
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Pairs of dimension `dim` (0 or 1).
    pub fn pairs(&self, dim: u8) -> &[PersistencePair] {
        &self.pairs[dim as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PersistencePair> {
        self.pairs[0].iter().chain(&self.pairs[1])
    }

    pub fn len(&self) -> usize {
        self.pairs[0].len() + self.pairs[1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of 0- and 1-pairs alive at threshold `t`.
    pub fn betti_at(&self, t: f64) -> (usize, usize) {
        let count = |d: usize| self.pairs[d].iter().filter(|p| p.alive_at(t)).count();
        (count(0), count(1))
    }
}

fn critical(cx: &FilteredComplex<'_>, cell: CellId) -> CriticalCell {
    CriticalCell {
        cell,
        pixel: cx.determining_pixel_unchecked(cell),
    }
}

fn make_pair(cx: &FilteredComplex<'_>, dim: u8, creator: CellId, destroyer: Option<CellId>) -> PersistencePair {
    PersistencePair {
        dim,
        birth: cx.value(creator),
        death: destroyer.map_or(ESSENTIAL_DEATH, |d| cx.value(d)),
        creator: critical(cx, creator),
        creator_peak: cx.peak_pixel_unchecked(creator),
        destroyer: destroyer.map(|d| critical(cx, d)),
    }
}

const PREFETCH_DISTANCE: usize = 8;

/// Persistence pairs of dimensions 0 and 1 with positive persistence.
///
/// Only the pixels are sorted. Every cell is owned by its corner with the
/// largest `(value rank, pixel index)` key, and the cells owned by one group
/// of equal-valued pixels form one contiguous block of the filtration
/// ordered by `(dim, index)`. The forward pass walks pixel groups and
/// records the edges it sees; the dual pass replays them backwards.
pub fn compute_persistence(cx: &FilteredComplex<'_>) -> Diagram {
    let (rows, cols) = cx.shape();
    let px = cx.image().values();
    let n = rows * cols;

    let mut by_value: Vec<(u64, u32)> = px
        .iter()
        .enumerate()
        .map(|(i, v)| (!(v + 0.0).to_bits(), i as u32))
        .collect();
    by_value.sort_unstable();
    // vertex births are dense value ranks, so a pixel's key is its age
    let mut uf = UnionFind::new(n);
    let mut group_start: Vec<u32> = Vec::new();
    for (k, &(v, p)) in by_value.iter().enumerate() {
        if let Some(&(_, ahead)) = by_value.get(k + PREFETCH_DISTANCE) {
            uf.prefetch(ahead);
        }
        if k == 0 || v != by_value[k - 1].0 {
            group_start.push(k as u32);
        }
        uf.set_birth(p, group_start.len() as u32 - 1);
    }
    group_start.push(n as u32);
    let sorted: Vec<u32> = by_value.into_iter().map(|(_, p)| p).collect();

    let gcols = 2 * cols - 1;
    let grid = |r: usize, c: usize| (r * gcols + c) as u32;
    let cell_of = |g: u32| CellId::new(g as usize / gcols, g as usize % gcols);
    let w = cols as u32;

    // (creator key, creator, destroyer) as grid indices, sorted by the
    // total order before the pairs are materialised
    let mut dim0: Vec<(u64, u32, u32)> = Vec::new();
    let mut dim1: Vec<(u64, u32, u32)> = Vec::new();
    // every edge in filtration order, as (grid index, value rank)
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(2 * n);
    // endpoints of an edge by grid index, lower pixel first
    let ends = |e: u32| {
        let (r, c) = (e as usize / gcols, e as usize % gcols);
        let a = ((r / 2) * cols + c / 2) as u32;
        if r % 2 == 0 {
            (a, a + 1)
        } else {
            (a, a + w)
        }
    };
    let mut entered = vec![0u64; n.div_ceil(64)];
    let is_in = |bits: &[u64], q: u32| bits[q as usize / 64] >> (q % 64) & 1 == 1;

    for g in group_start.windows(2) {
        let (lo, hi) = (g[0] as usize, g[1] as usize);
        if let Some(&ahead) = sorted.get(lo + PREFETCH_DISTANCE) {
            uf.prefetch(ahead.wrapping_sub(w));
            uf.prefetch(ahead);
            uf.prefetch(ahead + w);
        }
        let first = edges.len();
        let rank = uf.birth(sorted[lo]);
        if hi - lo == 1 {
            // a lone pixel owns exactly the edges to pixels already entered
            let p = sorted[lo];
            let (r, c) = (p as usize / cols, p as usize % cols);
            if r > 0 && is_in(&entered, p - w) {
                edges.push((grid(2 * r - 1, 2 * c), rank));
            }
            if c > 0 && is_in(&entered, p - 1) {
                edges.push((grid(2 * r, 2 * c - 1), rank));
            }
            if c + 1 < cols && is_in(&entered, p + 1) {
                edges.push((grid(2 * r, 2 * c + 1), rank));
            }
            if r + 1 < rows && is_in(&entered, p + w) {
                edges.push((grid(2 * r + 1, 2 * c), rank));
            }
        } else {
            for &p in &sorted[lo..hi] {
                let (r, c) = (p as usize / cols, p as usize % cols);
                let kp = uf.key(p);
                if r > 0 && uf.key(p - w) < kp {
                    edges.push((grid(2 * r - 1, 2 * c), rank));
                }
                if c > 0 && uf.key(p - 1) < kp {
                    edges.push((grid(2 * r, 2 * c - 1), rank));
                }
                if c + 1 < cols && uf.key(p + 1) < kp {
                    edges.push((grid(2 * r, 2 * c + 1), rank));
                }
                if r + 1 < rows && uf.key(p + w) < kp {
                    edges.push((grid(2 * r + 1, 2 * c), rank));
                }
            }
            edges[first..].sort_unstable();
        }
        for &p in &sorted[lo..hi] {
            entered[p as usize / 64] |= 1 << (p % 64);
        }
        for &(e, _) in &edges[first..] {
            let (p, q) = ends(e);
            let (ra, rb) = (uf.find(p), uf.find(q));
            if ra == rb {
                continue;
            }
            let (elder, younger) = if uf.key(ra) < uf.key(rb) { (ra, rb) } else { (rb, ra) };
            if uf.birth(younger) < rank {
                let y = younger as usize;
                dim0.push((uf.key(younger), grid(2 * (y / cols), 2 * (y % cols)), e));
            }
            uf.attach(younger, elder);
        }
    }
    if n > 0 && px[sorted[0] as usize] > ESSENTIAL_DEATH {
        let p = sorted[0] as usize;
        dim0.push((uf.key(sorted[0]), grid(2 * (p / cols), 2 * (p % cols)), u32::MAX));
    }
    drop(sorted);
    drop(entered);

    if rows > 1 && cols > 1 {
        // Dual vertices are squares (indexed by top-left pixel) plus the
        // outside. A square's birth is its value rank, so its key orders
        // squares as the filtration does; the outside is eldest of all.
        let sq_cols = cols - 1;
        let outside = ((rows - 1) * sq_cols) as u32;
        let mut dual = UnionFind::new(outside as usize + 1);
        for sr in 0..rows - 1 {
            for sc in 0..sq_cols {
                let tl = (sr * cols + sc) as u32;
                let rank = uf
                    .birth(tl)
                    .max(uf.birth(tl + 1))
                    .max(uf.birth(tl + w))
                    .max(uf.birth(tl + w + 1));
                dual.set_birth((sr * sq_cols + sc) as u32, rank);
            }
        }
        drop(uf);
        dual.set_birth(outside, u32::MAX);
        for (k, &(e, rank)) in edges.iter().enumerate().rev() {
            if k >= PREFETCH_DISTANCE {
                let ahead = edges[k - PREFETCH_DISTANCE].0 as usize;
                let s = ((ahead / gcols) / 2) * sq_cols + (ahead % gcols) / 2;
                dual.prefetch((s as u32).wrapping_sub(sq_cols as u32));
                dual.prefetch(s as u32);
            }
            let (gr, gc) = (e as usize / gcols, e as usize % gcols);
            let (r, c) = (gr / 2, gc / 2);
            let (s1, s2) = if gr % 2 == 0 {
                // horizontal pixel pair: squares above and below
                let above = if r == 0 {
                    outside
                } else {
                    ((r - 1) * sq_cols + c) as u32
                };
                let below = if r + 1 == rows {
                    outside
                } else {
                    (r * sq_cols + c) as u32
                };
                (above, below)
            } else {
                let left = if c == 0 { outside } else { (r * sq_cols + c - 1) as u32 };
                let right = if c + 1 == cols {
                    outside
                } else {
                    (r * sq_cols + c) as u32
                };
                (left, right)
            };
            let (ra, rb) = (dual.find(s1), dual.find(s2));
            if ra == rb {
                continue;
            }
            let (elder, younger) = if dual.key(ra) > dual.key(rb) {
                (ra, rb)
            } else {
                (rb, ra)
            };
            if rank < dual.birth(younger) {
                let y = younger as usize;
                let filler = grid(2 * (y / sq_cols) + 1, 2 * (y % sq_cols) + 1);
                dim1.push((((rank as u64) << 32) | e as u64, e, filler));
            }
            dual.attach(younger, elder);
        }
    }

    let materialise = |dim: u8, mut raw: Vec<(u64, u32, u32)>| {
        raw.sort_unstable_by_key(|r| r.0);
        raw.into_iter()
            .map(|(_, c, d)| make_pair(cx, dim, cell_of(c), (d != u32::MAX).then(|| cell_of(d))))
            .collect()
    };
    Diagram::new(rows, cols, materialise(0, dim0), materialise(1, dim1))
}

/// Diagram of an image, optionally after padding with a ring of [`PAD_VALUE`].
pub fn diagram_of_image(img: &GrayImage, pad: bool) -> Diagram {
    if pad {
        let padded = pad_border(img, PAD_VALUE).expect("pad value is in range");
        compute_persistence(&build_complex(&padded))
    } else {
        compute_persistence(&build_complex(img))
    }
}

/// Diagram of a binary mask: every pair is born at 1 and dies at 0.
pub fn diagram_of_mask(mask: &BinaryMask, pad: bool) -> Diagram {
    diagram_of_image(&mask.to_gray(), pad)
}

/// Diagrams of many images, in input order.
pub fn compute_batch(images: &[GrayImage], pad: bool, exec: Execution) -> Vec<Diagram> {
    exec.map(images, |img| diagram_of_image(img, pad))
}

/// `(β0, β1)` of the foreground under 4-adjacency.
///
/// β0 comes from a flood fill; β1 from the Euler characteristic
/// `χ = #V − #E + #F` of the foreground's cubical complex, `β1 = β0 − χ`.
pub fn betti_numbers(mask: &BinaryMask) -> (usize, usize) {
    let (rows, cols) = mask.shape();
    let bits = mask.bits();
    let mut seen = vec![false; bits.len()];
    let mut stack = Vec::new();
    let mut components = 0usize;
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (r, c) = (i / cols, i % cols);
            let neighbours = [
                (r > 0).then(|| i - cols),
                (r + 1 < rows).then(|| i + cols),
                (c > 0).then(|| i - 1),
                (c + 1 < cols).then(|| i + 1),
            ];
            for j in neighbours.into_iter().flatten() {
                if bits[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }

    let (mut v, mut e, mut f) = (0i64, 0i64, 0i64);
    for r in 0..rows {
        for c in 0..cols {
            if !mask.get(r, c) {
                continue;
            }
            v += 1;
            let right = c + 1 < cols && mask.get(r, c + 1);
            let down = r + 1 < rows && mask.get(r + 1, c);
            e += right as i64 + down as i64;
            if right && down && mask.get(r + 1, c + 1) {
                f += 1;
            }
        }
    }
    let euler = v - e + f;
    let b1 = components as i64 - euler;
    debug_assert!(b1 >= 0);
    (components, b1 as usize)
}
