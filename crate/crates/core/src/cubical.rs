//! V-construction cubical complex with a super-level filtration.
//!
//! Cells live on a `(2·rows − 1) × (2·cols − 1)` grid. A cell at grid
//! position `(r, c)` has dimension `(r mod 2) + (c mod 2)`; even/even cells
//! are the pixels. Every higher cell takes the minimum of its pixel corners,
//! so a cell is present in the sub-complex at threshold `a` iff its value is
//! `>= a`.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellId {
    pub row: usize,
    pub col: usize,
}

impl CellId {
    pub const fn new(row: usize, col: usize) -> Self {
        CellId { row, col }
    }

    #[inline]
    pub const fn dim(self) -> u8 {
        (self.row % 2 + self.col % 2) as u8
    }

    /// The cell of pixel `(row, col)`.
    pub const fn vertex(p: Pixel) -> Self {
        CellId {
            row: 2 * p.row,
            col: 2 * p.col,
        }
    }
}

/// Pixel coordinates, row first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub const fn new(row: usize, col: usize) -> Self {
        Pixel { row, col }
    }
}

/// Cell values are not stored; each is the minimum over its corner pixels.
#[derive(Clone, Debug)]
pub struct FilteredComplex<'a> {
    image: &'a GrayImage,
    grid_rows: usize,
    grid_cols: usize,
}

pub fn build_complex(img: &GrayImage) -> FilteredComplex<'_> {
    FilteredComplex::new(img)
}

impl<'a> FilteredComplex<'a> {
    pub fn new(image: &'a GrayImage) -> Self {
        let (rows, cols) = image.shape();
        FilteredComplex {
            image,
            grid_rows: 2 * rows - 1,
            grid_cols: 2 * cols - 1,
        }
    }

    pub fn image(&self) -> &'a GrayImage {
        self.image
    }

    /// Source image shape `(rows, cols)`.
    pub fn shape(&self) -> (usize, usize) {
        self.image.shape()
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    pub fn num_cells(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn contains(&self, cell: CellId) -> bool {
        cell.row < self.grid_rows && cell.col < self.grid_cols
    }

    fn check(&self, cell: CellId) -> Result<()> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(Error::CellOutOfGrid(cell.row, cell.col))
        }
    }

    #[inline]
    pub fn index(&self, cell: CellId) -> usize {
        cell.row * self.grid_cols + cell.col
    }

    #[inline]
    pub fn cell(&self, index: usize) -> CellId {
        CellId::new(index / self.grid_cols, index % self.grid_cols)
    }

    #[inline]
    pub fn value(&self, cell: CellId) -> f64 {
        let (r0, r1, c0, c1) = (cell.row / 2, cell.row.div_ceil(2), cell.col / 2, cell.col.div_ceil(2));
        let img = self.image;
        // normalise -0.0 so the bit-pattern sort key stays monotone
        img.get(r0, c0)
            .min(img.get(r0, c1))
            .min(img.get(r1, c0))
            .min(img.get(r1, c1))
            + 0.0
    }

    /// All cell values in grid index order.
    pub fn cell_values(&self) -> Vec<f64> {
        (0..self.num_cells()).map(|i| self.value(self.cell(i))).collect()
    }

    /// Codimension-one faces, in lexicographic order.
    pub fn faces(&self, cell: CellId) -> Result<Vec<CellId>> {
        self.check(cell)?;
        let CellId { row, col } = cell;
        let mut out = Vec::with_capacity(4);
        if row % 2 == 1 {
            out.push(CellId::new(row - 1, col));
        }
        if col % 2 == 1 {
            out.push(CellId::new(row, col - 1));
            out.push(CellId::new(row, col + 1));
        }
        if row % 2 == 1 {
            out.push(CellId::new(row + 1, col));
        }
        out.sort();
        Ok(out)
    }

    /// Codimension-one cofaces inside the grid, in lexicographic order.
    pub fn cofaces(&self, cell: CellId) -> Result<Vec<CellId>> {
        self.check(cell)?;
        let CellId { row, col } = cell;
        let mut out = Vec::with_capacity(4);
        if row % 2 == 0 {
            if row > 0 {
                out.push(CellId::new(row - 1, col));
            }
            if row + 1 < self.grid_rows {
                out.push(CellId::new(row + 1, col));
            }
        }
        if col % 2 == 0 {
            if col > 0 {
                out.push(CellId::new(row, col - 1));
            }
            if col + 1 < self.grid_cols {
                out.push(CellId::new(row, col + 1));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Pixel corners of a cell in lexicographic order (1, 2 or 4 of them).
    #[inline]
    pub(crate) fn corners(&self, cell: CellId) -> impl Iterator<Item = Pixel> {
        let (r0, r1) = (cell.row / 2, cell.row.div_ceil(2));
        let (c0, c1) = (cell.col / 2, cell.col.div_ceil(2));
        let rows = if r0 == r1 { 1 } else { 2 };
        let cols = if c0 == c1 { 1 } else { 2 };
        (0..rows).flat_map(move |dr| (0..cols).map(move |dc| Pixel::new(r0 + dr, c0 + dc)))
    }

    /// The corner pixel whose value equals the cell's filtration value; ties go
    /// to the lexicographically smallest pixel.
    pub fn determining_pixel(&self, cell: CellId) -> Result<Pixel> {
        self.check(cell)?;
        Ok(self.determining_pixel_unchecked(cell))
    }

    #[inline]
    pub(crate) fn determining_pixel_unchecked(&self, cell: CellId) -> Pixel {
        let v = self.value(cell);
        self.corners(cell)
            .find(|p| self.image.get(p.row, p.col) == v)
            .expect("cell value is the minimum of its corners")
    }

    /// The corner pixel with the largest value; ties go to the lexicographically
    /// smallest pixel.
    pub fn peak_pixel(&self, cell: CellId) -> Result<Pixel> {
        self.check(cell)?;
        Ok(self.peak_pixel_unchecked(cell))
    }

    #[inline]
    pub(crate) fn peak_pixel_unchecked(&self, cell: CellId) -> Pixel {
        let mut best = None::<(Pixel, f64)>;
        for p in self.corners(cell) {
            let v = self.image.get(p.row, p.col);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((p, v));
            }
        }
        best.expect("every cell has a corner").0
    }

    /// Linear cell indices in filtration order: value descending, then
    /// dimension ascending, then `(grid_row, grid_col)` ascending.
    pub fn filtration_order(&self) -> Vec<u32> {
        assert!(self.num_cells() < u32::MAX as usize, "grid too large");
        let cols = self.shape().1;
        let pixels = self.image.values();

        // dense rank of each pixel value, 0 = largest
        let mut by_value: Vec<(u64, u32)> = pixels
            .iter()
            .enumerate()
            .map(|(i, v)| (!(v + 0.0).to_bits(), i as u32))
            .collect();
        by_value.sort_unstable();
        let mut pixel_rank = vec![0u32; pixels.len()];
        let mut rank = 0u32;
        for (k, &(key, i)) in by_value.iter().enumerate() {
            if k > 0 && key != by_value[k - 1].0 {
                rank += 1;
            }
            pixel_rank[i as usize] = rank;
        }
        drop(by_value);

        // a cell's value is its smallest corner, i.e. its largest corner rank
        let cell_rank = |gr: usize, gc: usize| {
            let (r0, r1, c0, c1) = (gr / 2, gr.div_ceil(2), gc / 2, gc.div_ceil(2));
            pixel_rank[r0 * cols + c0]
                .max(pixel_rank[r0 * cols + c1])
                .max(pixel_rank[r1 * cols + c0])
                .max(pixel_rank[r1 * cols + c1])
        };
        let mut slots = vec![0u32; rank as usize + 2];
        for gr in 0..self.grid_rows {
            for gc in 0..self.grid_cols {
                slots[cell_rank(gr, gc) as usize + 1] += 1;
            }
        }
        for b in 1..slots.len() {
            slots[b] += slots[b - 1];
        }
        // one stable pass per dimension puts ties in (dim, index) order
        let mut order = vec![0u32; self.num_cells()];
        for dim in 0..3 {
            for gr in 0..self.grid_rows {
                let row_dim = gr % 2;
                if row_dim > dim || dim - row_dim > 1 {
                    continue;
                }
                let first = dim - row_dim;
                for gc in (first..self.grid_cols).step_by(2) {
                    let slot = &mut slots[cell_rank(gr, gc) as usize];
                    order[*slot as usize] = (gr * self.grid_cols + gc) as u32;
                    *slot += 1;
                }
            }
        }
        order
    }

    /// Dumps `grid_row,grid_col,dim,value` rows.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "grid_row,grid_col,dim,value")?;
        for i in 0..self.num_cells() {
            let cell = self.cell(i);
            writeln!(w, "{},{},{},{}", cell.row, cell.col, cell.dim(), self.value(cell))?;
        }
        Ok(())
    }
}
