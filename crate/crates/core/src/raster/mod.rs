//! Image containers, file I/O and border padding.

pub mod npy;
pub mod pgm;

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major grayscale image with every value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// Row-major binary image.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyImage);
    }
    if rows.checked_mul(cols) != Some(len) {
        return Err(Error::InvalidArgument(format!(
            "buffer of length {len} does not hold a {rows}x{cols} image"
        )));
    }
    Ok(())
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, values.len())?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ValueOutOfRange { value, index });
        }
        Ok(GrayImage { rows, cols, values })
    }

    /// Builds an image from a closure over `(row, col)`; values are clamped into `[0, 1]`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_shape(rows, cols, rows * cols)?;
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = f(r, c);
                if v.is_nan() {
                    return Err(Error::ValueOutOfRange {
                        value: v,
                        index: r * cols + c,
                    });
                }
                values.push(v.clamp(0.0, 1.0));
            }
        }
        Ok(GrayImage { rows, cols, values })
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Applies `f` to every value, clamping the result back into `[lo, hi]`.
    pub(crate) fn map_clamped(&self, lo: f64, hi: f64, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i, v).clamp(lo, hi))
            .collect();
        GrayImage {
            rows: self.rows,
            cols: self.cols,
            values,
        }
    }
}

impl BinaryMask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        check_shape(rows, cols, bits.len())?;
        Ok(BinaryMask { rows, cols, bits })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        check_shape(rows, cols, rows * cols)?;
        let bits = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Ok(BinaryMask { rows, cols, bits })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![false; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_all_zero(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// The mask as a `{0, 1}`-valued image.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            rows: self.rows,
            cols: self.cols,
            values: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Surrounds `img` with a one-pixel ring of `pad_value`.
pub fn pad_border(img: &GrayImage, pad_value: f64) -> Result<GrayImage> {
    if !(0.0..=1.0).contains(&pad_value) {
        return Err(Error::ValueOutOfRange {
            value: pad_value,
            index: 0,
        });
    }
    let (rows, cols) = (img.rows + 2, img.cols + 2);
    let mut values = vec![pad_value; rows * cols];
    for r in 0..img.rows {
        let dst = (r + 1) * cols + 1;
        values[dst..dst + img.cols].copy_from_slice(&img.values[r * img.cols..(r + 1) * img.cols]);
    }
    Ok(GrayImage { rows, cols, values })
}

/// Removes the outer one-pixel ring; inverse of [`pad_border`].
pub fn crop_border(img: &GrayImage) -> Result<GrayImage> {
    if img.rows < 3 || img.cols < 3 {
        return Err(Error::EmptyImage);
    }
    let (rows, cols) = (img.rows - 2, img.cols - 2);
    let mut values = Vec::with_capacity(rows * cols);
    for r in 1..=rows {
        values.extend_from_slice(&img.values[r * img.cols + 1..r * img.cols + 1 + cols]);
    }
    Ok(GrayImage { rows, cols, values })
}

/// `bit = value >= threshold`, for `threshold` in `(0, 1]`.
pub fn binarize(img: &GrayImage, threshold: f64) -> Result<BinaryMask> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} must lie in (0, 1]"
        )));
    }
    Ok(BinaryMask {
        rows: img.rows,
        cols: img.cols,
        bits: img.values.iter().map(|&v| v >= threshold).collect(),
    })
}

/// File encodings accepted by [`load_image`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RasterKind {
    /// NPY, little-endian `f4`, values in `[0, 1]`.
    GrayF32,
    /// Binary PGM (P5) with maxval 255, scaled by `1/255`.
    Gray8,
    /// PGM containing only 0 and 255, or NPY containing only 0 and 1.
    Mask,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Raster {
    Gray(GrayImage),
    Mask(BinaryMask),
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn is_npy(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("npy"))
}

pub fn load_image(path: impl AsRef<Path>, kind: RasterKind) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    match kind {
        RasterKind::GrayF32 => {
            let arr = npy::decode(&bytes)?;
            GrayImage::new(arr.rows, arr.cols, arr.data.iter().map(|&v| v as f64).collect()).map(Raster::Gray)
        }
        RasterKind::Gray8 => pgm::decode(&bytes).map(|p| Raster::Gray(p.to_gray())),
        RasterKind::Mask if is_npy(path) => {
            let arr = npy::decode(&bytes)?;
            let mut bits = Vec::with_capacity(arr.data.len());
            for (index, &v) in arr.data.iter().enumerate() {
                match v {
                    0.0 => bits.push(false),
                    1.0 => bits.push(true),
                    _ => return Err(Error::ValueOutOfRange { value: v as f64, index }),
                }
            }
            BinaryMask::new(arr.rows, arr.cols, bits).map(Raster::Mask)
        }
        RasterKind::Mask => pgm::decode(&bytes)?.to_mask().map(Raster::Mask),
    }
}

/// Loads a grayscale image, picking the codec from the extension (`.npy` or PGM).
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let kind = if is_npy(path) {
        RasterKind::GrayF32
    } else {
        RasterKind::Gray8
    };
    match load_image(path, kind)? {
        Raster::Gray(g) => Ok(g),
        Raster::Mask(m) => Ok(m.to_gray()),
    }
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    match load_image(path, RasterKind::Mask)? {
        Raster::Mask(m) => Ok(m),
        Raster::Gray(_) => unreachable!("mask loader returns masks"),
    }
}

/// Writes the image as an `f4` NPY file.
pub fn save_npy(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let data: Vec<f32> = img.values.iter().map(|&v| v as f32).collect();
    write_file(path.as_ref(), &npy::encode(img.rows, img.cols, &data))
}

/// Writes an arbitrary real-valued raster (e.g. a gradient) as an `f4` NPY file.
pub fn save_npy_raw(rows: usize, cols: usize, values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    check_shape(rows, cols, values.len())?;
    let data: Vec<f32> = values.iter().map(|&v| v as f32).collect();
    write_file(path.as_ref(), &npy::encode(rows, cols, &data))
}

pub fn load_npy_raw(path: impl AsRef<Path>) -> Result<npy::NpyArray> {
    npy::decode(&read_file(path.as_ref())?)
}

pub fn save_mask_pgm(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let pixels = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = pgm::Pgm {
        rows: mask.rows,
        cols: mask.cols,
        pixels,
    };
    write_file(path.as_ref(), &img.encode())
}
