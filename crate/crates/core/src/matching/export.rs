use serde_json::{json, Value};

use super::{CreatorReference, MatchTarget, MatchingResult};
use crate::persistence::Diagram;
use crate::svg::{palette, Svg};
use crate::JSON_SCHEMA_VERSION;

/// `{"schema": 1, "mode", "dims": [{dim, pairs: [{l_index, target, s, cost}], unmatched_truth, cost}], "total_cost"}`.
pub fn matching_json(result: &MatchingResult) -> Value {
    json!({
        "schema": JSON_SCHEMA_VERSION,
        "mode": result.mode,
        "dims": result.dims,
        "total_cost": result.total_cost,
    })
}

/// Creator locations of both diagrams drawn over the image frame; matched
/// features share a color (filled for `L`, ring for `T`), `L` features sent
/// to the diagonal are grey and unmatched `T` features are black rings.
pub fn overlay_svg(dl: &Diagram, dt: &Diagram, result: &MatchingResult, reference: CreatorReference) -> String {
    const SCALE: f64 = 8.0;
    let (rows, cols) = dl.shape();
    let (w, h) = (cols as f64 * SCALE, rows as f64 * SCALE);
    let mut svg = Svg::new(w, h);
    svg.rect(0.0, 0.0, w, h, "#f4f4f4");
    let center = |p: crate::cubical::Pixel| ((p.col as f64 + 0.5) * SCALE, (p.row as f64 + 0.5) * SCALE);
    let mut color = 0usize;
    for dm in &result.dims {
        let (l, t) = (dl.pairs(dm.dim), dt.pairs(dm.dim));
        let r = if dm.dim == 0 { SCALE * 0.45 } else { SCALE * 0.3 };
        for mp in &dm.pairs {
            let (lx, ly) = center(reference.pixel(&l[mp.l_index]));
            match mp.target {
                MatchTarget::Feature(j) => {
                    let (tx, ty) = center(reference.pixel(&t[j]));
                    let c = palette(color);
                    color += 1;
                    svg.line(lx, ly, tx, ty, c, 1.0)
                        .circle(lx, ly, r, c)
                        .hollow_circle(tx, ty, r * 1.4, c);
                }
                MatchTarget::Diagonal => {
                    svg.circle(lx, ly, r * 0.6, "#999999");
                }
            }
        }
        for u in &dm.unmatched_truth {
            let (tx, ty) = center(reference.pixel(&t[u.t_index]));
            svg.hollow_circle(tx, ty, r * 1.4, "black");
        }
    }
    svg.finish()
}
