//! Wall-clock scaling of persistence computation on random images.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::persistence::diagram_of_image;
use crate::raster::GrayImage;

pub const DEFAULT_SIZES: [usize; 4] = [128, 256, 512, 1024];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    /// Side length; images are `size × size`.
    pub size: usize,
    pub median_secs: f64,
    pub min_secs: f64,
    pub max_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub repeats: usize,
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    /// Median time ratio between two measured sizes.
    pub fn ratio(&self, large: usize, small: usize) -> Option<f64> {
        let median = |s| self.rows.iter().find(|r| r.size == s).map(|r| r.median_secs);
        Some(median(large)? / median(small)?)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:>6} {:>12} {:>12} {:>12}\n", "size", "median_ms", "min_ms", "max_ms");
        for r in &self.rows {
            out += &format!(
                "{:>6} {:>12.3} {:>12.3} {:>12.3}\n",
                r.size,
                r.median_secs * 1e3,
                r.min_secs * 1e3,
                r.max_secs * 1e3
            );
        }
        if let Some(q) = self.ratio(512, 256) {
            out += &format!("ratio 512/256: {q:.3}\n");
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": crate::JSON_SCHEMA_VERSION,
            "repeats": self.repeats,
            "rows": self.rows,
            "ratio_512_256": self.ratio(512, 256),
        })
    }
}

/// Uniform random image in `[0, 1)`.
pub fn random_image(rows: usize, cols: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(rows, cols, |_, _| rng.gen::<f64>()).expect("values in range")
}

/// Times padded persistence on one random image per size.
///
/// Each size gets one untimed warm-up run, then the `repeats` rounds
/// interleave the sizes so that machine-wide slowdowns hit all of them.
pub fn scaling(sizes: &[usize], repeats: usize, seed: u64) -> Result<ScalingReport> {
    if repeats == 0 || sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidArgument(
            "bench needs nonempty sizes and repeats >= 1".into(),
        ));
    }
    let images: Vec<GrayImage> = sizes.iter().map(|&s| random_image(s, s, seed)).collect();
    let time = |img: &GrayImage| {
        let start = Instant::now();
        std::hint::black_box(diagram_of_image(img, true));
        start.elapsed()
    };
    images.iter().for_each(|img| {
        time(img);
    });
    let mut times: Vec<Vec<Duration>> = vec![Vec::with_capacity(repeats); sizes.len()];
    for _ in 0..repeats {
        for (img, t) in images.iter().zip(&mut times) {
            t.push(time(img));
        }
    }
    let rows = sizes
        .iter()
        .zip(times)
        .map(|(&size, mut t)| {
            t.sort();
            ScalingRow {
                size,
                median_secs: t[t.len() / 2].as_secs_f64(),
                min_secs: t[0].as_secs_f64(),
                max_secs: t[t.len() - 1].as_secs_f64(),
            }
        })
        .collect();
    Ok(ScalingReport { repeats, rows })
}
