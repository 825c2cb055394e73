//! Automatic brain-tissue ROI masks for T2-weighted perfusion MR slices.
//!
//! A tracker walks a zig-zag path along the tissue boundary in sub-pixel steps.
//! The intensities it samples feed a CUSUM change-point detector; every alarm
//! marks a boundary crossing and reverses the turning direction. The crossings
//! are rasterized into a closed contour and filled into a binary mask.
//!
//! ```no_run
//! use perfusion_roi::{imaging::PerfusionStack, pipeline::{segment_image, PipelineConfig}};
//!
//! let stack = PerfusionStack::load("scan_dir")?;
//! let img = stack.working_image(0, None)?;
//! let result = segment_image(img, &PipelineConfig::for_image(img))?;
//! println!("{} crossings, {:?}", result.trace.change_points.len(), result.trace.termination);
//! # Ok::<(), perfusion_roi::Error>(())
//! ```

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cusum;
pub mod error;
pub mod imaging;
pub mod mask;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod planner;
pub mod seed;
pub mod segmenter;

pub use error::{Error, Result};
pub use imaging::{GrayImage, PerfusionStack, Point2D};
pub use mask::BinaryMask;
pub use segmenter::{BoundaryTrace, Termination};
