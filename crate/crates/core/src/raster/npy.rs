//! NPY v1.0 container restricted to 2D little-endian `f4` arrays in C order.

use crate::error::{Error, Result};

const MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Clone, Debug, PartialEq)]
pub struct NpyArray {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedHeader(msg.into())
}

/// Value following `'key':` in a Python dict literal, up to the next top-level comma.
fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let needle = format!("'{key}'");
    let start = header
        .find(&needle)
        .ok_or_else(|| malformed(format!("missing key {key}")))?;
    let rest = header[start + needle.len()..].trim_start();
    let rest = rest
        .strip_prefix(':')
        .ok_or_else(|| malformed(format!("expected ':' after {key}")))?
        .trim_start();
    if rest.starts_with('(') {
        let end = rest.find(')').ok_or_else(|| malformed("unterminated shape tuple"))?;
        return Ok(&rest[..=end]);
    }
    let end = rest.find([',', '}']).unwrap_or(rest.len());
    Ok(rest[..end].trim())
}

fn parse_shape(tuple: &str) -> Result<(usize, usize)> {
    let inner = tuple
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| malformed("shape is not a tuple"))?;
    let dims = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| malformed(format!("bad shape entry {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    match dims[..] {
        [rows, cols] => Ok((rows, cols)),
        _ => Err(malformed(format!("expected a 2D shape, got {} dims", dims.len()))),
    }
}

pub fn decode(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(malformed("missing NPY magic"));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(malformed(format!("unsupported NPY version {major}.{minor}")));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = 10 + header_len;
    let header = bytes.get(10..data_start).ok_or_else(|| malformed("truncated header"))?;
    let header = std::str::from_utf8(header).map_err(|_| malformed("header is not ASCII"))?;

    let descr = dict_value(header, "descr")?;
    if descr.trim_matches(['\'', '"']) != "<f4" {
        return Err(malformed(format!("unsupported dtype {descr}, expected '<f4'")));
    }
    if dict_value(header, "fortran_order")? != "False" {
        return Err(malformed("fortran_order arrays are not supported"));
    }
    let (rows, cols) = parse_shape(dict_value(header, "shape")?)?;
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyImage);
    }

    let payload = &bytes[data_start..];
    let expected = rows * cols * 4;
    if payload.len() != expected {
        return Err(Error::ShapeMismatch {
            expected: (rows, cols),
            found: (payload.len() / 4 / cols.max(1), cols),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(NpyArray { rows, cols, data })
}

pub fn encode(rows: usize, cols: usize, data: &[f32]) -> Vec<u8> {
    debug_assert_eq!(rows * cols, data.len());
    let mut header = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': ({rows}, {cols}), }}");
    // magic + version + length + header + '\n' is padded to a multiple of 64
    let unpadded = 10 + header.len() + 1;
    header.extend(std::iter::repeat_n(' ', (64 - unpadded % 64) % 64));
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len() + data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_aligned() {
        let bytes = encode(2, 3, &[0.0; 6]);
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!((10 + header_len) % 64, 0);
        assert_eq!(bytes[10 + header_len - 1], b'\n');
    }

    #[test]
    fn parses_numpy_style_header() {
        // header as written by numpy.save for a (2, 2) float32 array
        let header = "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }";
        let mut h = header.to_string();
        h.extend(std::iter::repeat_n(' ', 128 - 10 - header.len() - 1));
        h.push('\n');
        let mut bytes = MAGIC.to_vec();
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&(h.len() as u16).to_le_bytes());
        bytes.extend_from_slice(h.as_bytes());
        for v in [0.0f32, 1.0, 0.5, 0.25] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let arr = decode(&bytes).unwrap();
        assert_eq!((arr.rows, arr.cols), (2, 2));
        assert_eq!(arr.data, vec![0.0, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(decode(b"hello"), Err(Error::MalformedHeader(_))));
        let mut bytes = encode(2, 2, &[0.0; 4]);
        bytes.pop();
        assert!(matches!(decode(&bytes), Err(Error::ShapeMismatch { .. })));
        let mut wrong = encode(1, 1, &[0.0]);
        let pos = wrong.windows(3).position(|w| w == b"<f4").unwrap();
        wrong[pos + 2] = b'8';
        assert!(matches!(decode(&wrong), Err(Error::MalformedHeader(_))));
        let three_d = {
            let mut b = encode(2, 2, &[0.0; 4]);
            let pos = b.windows(6).position(|w| w == b"(2, 2)").unwrap();
            b[pos..pos + 6].copy_from_slice(b"(2,2,)");
            b
        };
        // "(2,2,)" still parses as 2D; a 1D tuple must not
        let one_d = {
            let mut b = three_d.clone();
            let pos = b.windows(6).position(|w| w == b"(2,2,)").unwrap();
            b[pos..pos + 6].copy_from_slice(b"(4,)  ");
            b
        };
        assert!(decode(&three_d).is_ok());
        assert!(matches!(decode(&one_d), Err(Error::MalformedHeader(_))));
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let data: Vec<f32> = (0..rows * cols)
                .map(|i| f32::from_bits((seed as u32).wrapping_mul(2654435761).wrapping_add(i as u32) & 0x3f7f_ffff))
                .collect();
            let bytes = encode(rows, cols, &data);
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(encode(back.rows, back.cols, &back.data), bytes);
        }
    }
}
