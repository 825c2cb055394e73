//! One-call segmentation of a working image.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imaging::{GrayImage, Point2D};
use crate::mask::{trace_to_mask, BinaryMask};
use crate::planner::PlannerParams;
use crate::seed::SeedConfig;
use crate::segmenter::{segment_boundary, BoundaryTrace, TrackerOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: SeedConfig,
    pub seed_override: Option<Point2D>,
    pub planner: PlannerParams,
    pub tracker: TrackerOptions,
}

impl PipelineConfig {
    pub fn for_image(img: &GrayImage) -> Self {
        Self {
            seed: SeedConfig::default(),
            seed_override: None,
            planner: PlannerParams::for_image(img),
            tracker: TrackerOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub trace: BoundaryTrace,
    pub mask: BinaryMask,
    /// The filled mask has no pixels beyond the contour itself.
    pub degenerate_contour: bool,
}

/// Seed search, boundary tracking and mask filling for one image.
pub fn segment_image(img: &GrayImage, config: &PipelineConfig) -> Result<Segmentation> {
    let trace = segment_boundary(img, &config.seed, config.seed_override, &config.planner, &config.tracker)?;
    let filled = trace_to_mask(&trace, img.width(), img.height())?;
    Ok(Segmentation {
        trace,
        mask: filled.mask,
        degenerate_contour: filled.degenerate_contour,
    })
}
