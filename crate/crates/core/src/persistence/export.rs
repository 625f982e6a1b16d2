use std::io::{self, Write};

use super::Diagram;
use crate::svg::Svg;

/// Writes one row per pair:
/// `dim,birth,death,creator_row,creator_col,destroyer_row,destroyer_col,plot_x,plot_y`.
///
/// Pixel coordinates refer to the image the diagram was computed on, so they
/// include the padding ring when padding was enabled. Destroyer columns are
/// empty for the essential pair.
pub fn write_diagram_csv(diagram: &Diagram, mut w: impl Write) -> io::Result<()> {
    writeln!(
        w,
        "dim,birth,death,creator_row,creator_col,destroyer_row,destroyer_col,plot_x,plot_y"
    )?;
    for p in diagram.iter() {
        let (dr, dc) = match p.destroyer {
            Some(d) => (d.pixel.row.to_string(), d.pixel.col.to_string()),
            None => (String::new(), String::new()),
        };
        let (x, y) = p.plot_coords();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            p.dim, p.birth, p.death, p.creator.pixel.row, p.creator.pixel.col, dr, dc, x, y
        )?;
    }
    Ok(())
}

/// Barcode: one horizontal bar per pair on a `1 − value` axis, 0-pairs first.
pub fn barcode_svg(diagram: &Diagram) -> String {
    const WIDTH: f64 = 600.0;
    const MARGIN: f64 = 40.0;
    const BAR: f64 = 6.0;
    const GAP: f64 = 3.0;
    let n = diagram.len();
    let height = 2.0 * MARGIN + n as f64 * (BAR + GAP);
    let span = WIDTH - 2.0 * MARGIN;
    let mut svg = Svg::new(WIDTH, height.max(2.0 * MARGIN + 10.0));
    svg.line(
        MARGIN,
        height - MARGIN / 2.0,
        WIDTH - MARGIN,
        height - MARGIN / 2.0,
        "black",
        1.0,
    )
    .text(MARGIN - 4.0, height - 6.0, 10.0, "1")
    .text(WIDTH - MARGIN - 4.0, height - 6.0, 10.0, "0");
    for (i, p) in diagram.iter().enumerate() {
        let x0 = MARGIN + (1.0 - p.birth) * span;
        let x1 = MARGIN + (1.0 - p.death) * span;
        let y = MARGIN + i as f64 * (BAR + GAP);
        let color = if p.dim == 0 { "#1f77b4" } else { "#d62728" };
        svg.rect(x0, y, (x1 - x0).max(0.5), BAR, color);
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::diagram_of_mask;
    use crate::raster::BinaryMask;

    #[test]
    fn csv_rows_for_mask() {
        let mask = BinaryMask::from_fn(5, 5, |r, c| r == 2 && c != 2).unwrap();
        let d = diagram_of_mask(&mask, false);
        let mut out = Vec::new();
        write_diagram_csv(&d, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], "0,1,0,2,0,,,0,1");
        let fields: Vec<&str> = rows[1].split(',').collect();
        assert_eq!(&fields[..5], &["0", "1", "0", "2", "3"]);
        assert!(!fields[5].is_empty() && !fields[6].is_empty());
        assert!(rows[1].ends_with(",0,1"));
    }

    #[test]
    fn barcode_has_one_bar_per_pair() {
        let mask = BinaryMask::from_fn(6, 6, |r, c| {
            (1..5).contains(&r) && (1..5).contains(&c) && (r, c) != (2, 2)
        })
        .unwrap();
        let d = diagram_of_mask(&mask, true);
        let svg = barcode_svg(&d);
        assert_eq!(svg.matches("<rect").count(), d.len());
        assert!(svg.starts_with("<svg"));
    }
}
