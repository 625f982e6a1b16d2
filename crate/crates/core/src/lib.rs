//! Cubical persistent homology of 2D rasters with critical-cell tracking,
//! spatially weighted matching of persistence diagrams, and a spatial-aware
//! topological loss (value plus surrogate gradient) for segmentation.
//!
//! The pipeline, bottom-up:
//!
//! * [`raster`]: grayscale images, binary masks, NPY/PGM codecs, border padding.
//! * [`cubical`]: the V-construction complex with a super-level filtration.
//! * [`persistence`]: 0- and 1-dimensional pairs with creator/destroyer cells.
//! * [`matching`]: optimal diagram matching, vanilla or spatially weighted.
//! * [`loss`]: the topological loss, its gradient image and the BCE pixel loss.
//! * [`metrics`]: Betti errors, accuracy, Dice and clDice.
//! * [`descent`]: gradient descent on the likelihood image itself.
//!
//! Batch entry points take an [`Execution`] and run data-parallel through
//! rayon when the `parallel` feature is enabled (the default).

pub mod bench;
pub mod cubical;
pub mod descent;
mod error;
pub mod exec;
pub mod loss;
pub mod matching;
pub mod metrics;
pub mod persistence;
pub mod raster;
pub mod svg;

pub use cubical::{CellId, FilteredComplex, Pixel};
pub use error::{Error, Result};
pub use exec::Execution;
pub use loss::{GradientImage, LossConfig, LossReport};
pub use matching::{MatchMode, MatchTarget, MatchingResult};
pub use metrics::MetricReport;
pub use persistence::{Diagram, PersistencePair};
pub use raster::{BinaryMask, GrayImage};

/// Version of JSON documents written by this crate.
pub const JSON_SCHEMA_VERSION: u32 = 1;
