//! Binary PGM (P5) with maxval 255.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl Pgm {
    pub fn to_gray(&self) -> GrayImage {
        let values = self.pixels.iter().map(|&p| p as f64 / 255.0).collect();
        GrayImage::new(self.rows, self.cols, values).expect("8-bit values are in range")
    }

    /// Fails unless every pixel is 0 or 255.
    pub fn to_mask(&self) -> Result<BinaryMask> {
        let mut bits = Vec::with_capacity(self.pixels.len());
        for (index, &p) in self.pixels.iter().enumerate() {
            match p {
                0 => bits.push(false),
                255 => bits.push(true),
                _ => return Err(Error::ValueOutOfRange { value: p as f64, index }),
            }
        }
        BinaryMask::new(self.rows, self.cols, bits)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("expected {what}")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Pgm> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::MalformedHeader("missing P5 magic".into()));
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let cols = cur.number("width")?;
    let rows = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::MalformedHeader(format!("maxval {maxval}, expected 255")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyImage);
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::MalformedHeader("missing separator after maxval".into()));
    }
    let pixels = &bytes[cur.pos + 1..];
    if pixels.len() != rows * cols {
        return Err(Error::ShapeMismatch {
            expected: (rows, cols),
            found: (pixels.len() / cols, cols),
        });
    }
    Ok(Pgm {
        rows,
        cols,
        pixels: pixels.to_vec(),
    })
}
