//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satloss::cubical::CellId;
use satloss::matching::MatchTarget;
use satloss::persistence::CriticalCell;
use satloss::{BinaryMask, Diagram, GrayImage, MatchMode, MatchingResult, PersistencePair, Pixel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_discrete_image(rng: &mut impl Rng, rows: usize, cols: usize, levels: &[f64]) -> GrayImage {
    GrayImage::from_fn(rows, cols, |_, _| levels[rng.gen_range(0..levels.len())]).unwrap()
}

/// Pixel values are a shuffled evenly spaced grid plus jitter well below the
/// spacing, so all values are distinct and separated by more than `min_gap`.
pub fn distinct_image(rng: &mut impl Rng, rows: usize, cols: usize, min_gap: f64) -> GrayImage {
    let n = rows * cols;
    let spacing = 0.98 / n as f64;
    assert!(spacing > 2.0 * min_gap);
    let mut slots: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        slots.swap(i, rng.gen_range(0..=i));
    }
    let jitter = (spacing - min_gap) / 2.0;
    let values = slots
        .iter()
        .map(|&k| 0.01 + spacing * (k as f64 + 0.5) + rng.gen_range(-jitter / 2.0..jitter / 2.0))
        .collect();
    GrayImage::new(rows, cols, values).unwrap()
}

pub fn random_mask(rng: &mut impl Rng, rows: usize, cols: usize, p: f64) -> BinaryMask {
    BinaryMask::from_fn(rows, cols, |_, _| rng.gen_bool(p)).unwrap()
}

// ---- Betti numbers ----

pub fn components(mask: &BinaryMask) -> usize {
    let (rows, cols) = mask.shape();
    let mut label = vec![false; rows * cols];
    let mut count = 0;
    for start in 0..rows * cols {
        if !mask.bits()[start] || label[start] {
            continue;
        }
        count += 1;
        let mut queue = std::collections::VecDeque::from([start]);
        label[start] = true;
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / cols, i % cols);
            let mut visit = |j: usize| {
                if mask.bits()[j] && !label[j] {
                    label[j] = true;
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(i - cols);
            }
            if r + 1 < rows {
                visit(i + cols);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < cols {
                visit(i + 1);
            }
        }
    }
    count
}

/// `V − E + F` of the foreground complex: pixels, 4-adjacent pairs, full 2×2 blocks.
pub fn euler_characteristic(mask: &BinaryMask) -> i64 {
    let (rows, cols) = mask.shape();
    let on = |r: usize, c: usize| mask.get(r, c);
    let (mut v, mut e, mut f) = (0i64, 0i64, 0i64);
    for r in 0..rows {
        for c in 0..cols {
            if !on(r, c) {
                continue;
            }
            v += 1;
            if c + 1 < cols && on(r, c + 1) {
                e += 1;
            }
            if r + 1 < rows && on(r + 1, c) {
                e += 1;
            }
            if r + 1 < rows && c + 1 < cols && on(r, c + 1) && on(r + 1, c) && on(r + 1, c + 1) {
                f += 1;
            }
        }
    }
    v - e + f
}

pub fn betti(mask: &BinaryMask) -> (usize, usize) {
    let b0 = components(mask);
    let b1 = b0 as i64 - euler_characteristic(mask);
    assert!(b1 >= 0);
    (b0, b1 as usize)
}

// ---- boundary-matrix reduction ----

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RawPair {
    pub dim: u8,
    pub creator: (usize, usize),
    pub destroyer: Option<(usize, usize)>,
}

fn cell_value(img: &GrayImage, r: usize, c: usize) -> f64 {
    let rs = if r.is_multiple_of(2) {
        vec![r / 2]
    } else {
        vec![r / 2, r / 2 + 1]
    };
    let cs = if c.is_multiple_of(2) {
        vec![c / 2]
    } else {
        vec![c / 2, c / 2 + 1]
    };
    let mut v = f64::INFINITY;
    for &a in &rs {
        for &b in &cs {
            v = v.min(img.get(a, b));
        }
    }
    v
}

fn boundary(r: usize, c: usize) -> Vec<(usize, usize)> {
    match (r % 2, c % 2) {
        (0, 0) => vec![],
        (0, 1) => vec![(r, c - 1), (r, c + 1)],
        (1, 0) => vec![(r - 1, c), (r + 1, c)],
        _ => vec![(r - 1, c), (r, c - 1), (r, c + 1), (r + 1, c)],
    }
}

/// Persistence pairs with positive persistence (and the essential class,
/// when born above 0) from the standard column reduction over GF(2).
pub fn reduce(img: &GrayImage) -> Vec<RawPair> {
    let (rows, cols) = img.shape();
    let (gr, gc) = (2 * rows - 1, 2 * cols - 1);
    let mut cells: Vec<(usize, usize)> = (0..gr).flat_map(|r| (0..gc).map(move |c| (r, c))).collect();
    let value: HashMap<(usize, usize), f64> = cells.iter().map(|&(r, c)| ((r, c), cell_value(img, r, c))).collect();
    cells.sort_by(|a, b| {
        value[b]
            .partial_cmp(&value[a])
            .unwrap()
            .then((a.0 % 2 + a.1 % 2).cmp(&(b.0 % 2 + b.1 % 2)))
            .then(a.cmp(b))
    });
    let pos: HashMap<(usize, usize), usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let mut columns: Vec<Vec<usize>> = cells
        .iter()
        .map(|&(r, c)| {
            let mut col: Vec<usize> = boundary(r, c).iter().map(|f| pos[f]).collect();
            col.sort_unstable();
            col
        })
        .collect();
    let mut pivot_owner: HashMap<usize, usize> = HashMap::new();
    let mut pairs = Vec::new();
    let mut paired = vec![false; cells.len()];
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match pivot_owner.get(&low) {
                Some(&k) => {
                    let other = columns[k].clone();
                    columns[j] = symmetric_difference(&columns[j], &other);
                }
                None => break,
            }
        }
        if let Some(&low) = columns[j].last() {
            pivot_owner.insert(low, j);
            paired[low] = true;
            paired[j] = true;
            let (b, d) = (cells[low], cells[j]);
            if value[&b] > value[&d] {
                pairs.push(RawPair {
                    dim: (b.0 % 2 + b.1 % 2) as u8,
                    creator: b,
                    destroyer: Some(d),
                });
            }
        }
    }
    for (i, &cell) in cells.iter().enumerate() {
        if !paired[i] && value[&cell] > 0.0 {
            pairs.push(RawPair {
                dim: (cell.0 % 2 + cell.1 % 2) as u8,
                creator: cell,
                destroyer: None,
            });
        }
    }
    pairs.sort();
    pairs
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j, mut out) = (0, 0, Vec::with_capacity(a.len() + b.len()));
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn raw_pairs(d: &Diagram) -> Vec<RawPair> {
    let mut out: Vec<RawPair> = d
        .iter()
        .map(|p| RawPair {
            dim: p.dim,
            creator: (p.creator.cell.row, p.creator.cell.col),
            destroyer: p.destroyer.map(|x| (x.cell.row, x.cell.col)),
        })
        .collect();
    out.sort();
    out
}

// ---- matching ----

pub fn pair_at(dim: u8, birth: f64, death: f64, creator: Pixel) -> PersistencePair {
    let critical = CriticalCell {
        cell: CellId::vertex(creator),
        pixel: creator,
    };
    PersistencePair {
        dim,
        birth,
        death,
        creator: critical,
        creator_peak: creator,
        destroyer: Some(critical),
    }
}

pub fn random_pairs(rng: &mut impl Rng, dim: u8, n: usize, shape: (usize, usize)) -> Vec<PersistencePair> {
    (0..n)
        .map(|_| {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            let px = Pixel::new(rng.gen_range(0..shape.0), rng.gen_range(0..shape.1));
            pair_at(dim, a.max(b), a.min(b), px)
        })
        .collect()
}

pub fn oracle_weight(p: &PersistencePair, t: &PersistencePair, shape: (usize, usize), mode: MatchMode) -> f64 {
    match mode {
        MatchMode::Vanilla => 1.0,
        MatchMode::Spatial => {
            let dy = (p.creator.pixel.row as f64 - t.creator.pixel.row as f64) / shape.0 as f64;
            let dx = (p.creator.pixel.col as f64 - t.creator.pixel.col as f64) / shape.1 as f64;
            (dy * dy + dx * dx).max(0.05)
        }
    }
}

/// Cost of assigning `l[i]` to `t[assign[i]]` (or the diagonal for `None`),
/// with every unassigned `t` sent to the diagonal.
pub fn assignment_cost(
    l: &[PersistencePair],
    t: &[PersistencePair],
    shape: (usize, usize),
    mode: MatchMode,
    assign: &[Option<usize>],
) -> f64 {
    let half_sq = |p: &PersistencePair| (p.birth - p.death).powi(2) / 2.0;
    let mut used = vec![false; t.len()];
    let mut total = 0.0;
    for (p, a) in l.iter().zip(assign) {
        total += match *a {
            Some(j) => {
                used[j] = true;
                let q = &t[j];
                ((p.birth - q.birth).powi(2) + (p.death - q.death).powi(2)) * oracle_weight(p, q, shape, mode)
            }
            None => half_sq(p),
        };
    }
    total
        + t.iter()
            .zip(&used)
            .filter(|(_, &u)| !u)
            .map(|(q, _)| half_sq(q))
            .sum::<f64>()
}

/// Minimum over all partial injections `L → T`.
pub fn brute_force(l: &[PersistencePair], t: &[PersistencePair], shape: (usize, usize), mode: MatchMode) -> f64 {
    fn go(
        i: usize,
        assign: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut f64,
        ctx: (&[PersistencePair], &[PersistencePair], (usize, usize), MatchMode),
    ) {
        let (l, t, shape, mode) = ctx;
        if i == l.len() {
            *best = best.min(assignment_cost(l, t, shape, mode, assign));
            return;
        }
        assign.push(None);
        go(i + 1, assign, used, best, ctx);
        assign.pop();
        for j in 0..t.len() {
            if !used[j] {
                used[j] = true;
                assign.push(Some(j));
                go(i + 1, assign, used, best, ctx);
                assign.pop();
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(
        0,
        &mut Vec::new(),
        &mut vec![false; t.len()],
        &mut best,
        (l, t, shape, mode),
    );
    best
}

pub fn assignment_of(m: &MatchingResult, dim: u8) -> Vec<Option<usize>> {
    m.dim(dim)
        .pairs
        .iter()
        .map(|p| match p.target {
            MatchTarget::Feature(j) => Some(j),
            MatchTarget::Diagonal => None,
        })
        .collect()
}

/// Topological loss of `dl` under a matching computed elsewhere; diagonal
/// targets are the midpoint of the pair's current coordinates.
pub fn frozen_loss(dl: &Diagram, dt: &Diagram, m: &MatchingResult) -> f64 {
    let mut total = 0.0;
    for dm in &m.dims {
        for mp in &dm.pairs {
            let p = &dl.pairs(dm.dim)[mp.l_index];
            let (bt, dt_) = match mp.target {
                MatchTarget::Feature(j) => {
                    let q = &dt.pairs(dm.dim)[j];
                    (q.birth, q.death)
                }
                MatchTarget::Diagonal => {
                    let mid = (p.birth + p.death) / 2.0;
                    (mid, mid)
                }
            };
            total += mp.spatial_weight * ((p.birth - bt).powi(2) + (p.death - dt_).powi(2));
        }
    }
    total
}

// ---- bottleneck feasibility ----

/// Whether the two point sets admit a matching (with diagonal) whose every
/// edge has L∞ length at most `eps`.
pub fn bottleneck_within(a: &[(f64, f64)], b: &[(f64, f64)], eps: f64) -> bool {
    let (na, nb) = (a.len(), b.len());
    let eps = eps + 1e-12;
    let to_diag = |p: (f64, f64)| (p.0 - p.1) / 2.0;
    // left: a points then a diagonal copy per b point; right: b points then
    // a diagonal copy per a point
    let n = na + nb;
    let ok = |i: usize, j: usize| match (i < na, j < nb) {
        (true, true) => (a[i].0 - b[j].0).abs().max((a[i].1 - b[j].1).abs()) <= eps,
        (true, false) => j - nb == i && to_diag(a[i]) <= eps,
        (false, true) => i - na == j && to_diag(b[j]) <= eps,
        (false, false) => true,
    };
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(
        i: usize,
        n: usize,
        ok: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..n {
            if ok(i, j) && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, n, ok, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    (0..n).all(|i| augment(i, n, &ok, &mut vec![false; n], &mut owner))
}

pub fn points(d: &Diagram, dim: u8) -> Vec<(f64, f64)> {
    d.pairs(dim).iter().map(|p| (p.birth, p.death)).collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
