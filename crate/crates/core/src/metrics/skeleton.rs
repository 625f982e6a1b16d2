//! Zhang–Suen thinning.

use crate::raster::BinaryMask;

/// Neighbours P2..P9 clockwise from north; outside pixels read as 0.
#[inline]
fn neighbours(bits: &[bool], rows: usize, cols: usize, r: usize, c: usize) -> [bool; 8] {
    let at = |dr: isize, dc: isize| -> bool {
        let (rr, cc) = (r as isize + dr, c as isize + dc);
        rr >= 0 && cc >= 0 && (rr as usize) < rows && (cc as usize) < cols && bits[rr as usize * cols + cc as usize]
    };
    [
        at(-1, 0),
        at(-1, 1),
        at(0, 1),
        at(1, 1),
        at(1, 0),
        at(1, -1),
        at(0, -1),
        at(-1, -1),
    ]
}

/// Plain Zhang–Suen: alternate the two deletion sub-iterations until stable.
pub fn zhang_suen(mask: &BinaryMask) -> BinaryMask {
    let (rows, cols) = mask.shape();
    let mut bits = mask.bits().to_vec();
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for step in 0..2 {
            doomed.clear();
            for r in 0..rows {
                for c in 0..cols {
                    if !bits[r * cols + c] {
                        continue;
                    }
                    let n = neighbours(&bits, rows, cols, r, c);
                    let [p2, _, p4, _, p6, _, p8, _] = n;
                    let count = n.iter().filter(|&&b| b).count();
                    if !(2..=6).contains(&count) {
                        continue;
                    }
                    let transitions = (0..8).filter(|&k| !n[k] && n[(k + 1) % 8]).count();
                    if transitions != 1 {
                        continue;
                    }
                    let keep = if step == 0 {
                        (p2 && p4 && p6) || (p4 && p6 && p8)
                    } else {
                        (p2 && p4 && p8) || (p2 && p6 && p8)
                    };
                    if !keep {
                        doomed.push(r * cols + c);
                    }
                }
            }
            for &i in &doomed {
                bits[i] = false;
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            break;
        }
    }
    BinaryMask::new(rows, cols, bits).expect("shape unchanged")
}

/// Zhang–Suen skeleton, plus one pixel for every 8-connected component of
/// `mask` that thinning erased entirely (2×2 blocks vanish otherwise). The
/// result is a subset of `mask` and is nonempty whenever `mask` is.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let (rows, cols) = mask.shape();
    let thin = zhang_suen(mask);
    let src = mask.bits();
    let mut out = thin.bits().to_vec();
    let mut label = vec![false; src.len()];
    let mut stack = Vec::new();
    for start in 0..src.len() {
        if !src[start] || label[start] {
            continue;
        }
        label[start] = true;
        stack.push(start);
        let mut has_skeleton = false;
        while let Some(i) = stack.pop() {
            has_skeleton |= out[i];
            let (r, c) = (i / cols, i % cols);
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr < 0 || cc < 0 || rr as usize >= rows || cc as usize >= cols {
                        continue;
                    }
                    let j = rr as usize * cols + cc as usize;
                    if src[j] && !label[j] {
                        label[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if !has_skeleton {
            out[start] = true;
        }
    }
    BinaryMask::new(rows, cols, out).expect("shape unchanged")
}
