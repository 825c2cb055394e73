use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_image, save_image, GrayImage};
use crate::error::{Error, Result};

/// Timepoint used for segmentation unless overridden: the 4th acquisition,
/// after the signal has reached steady state.
pub const DEFAULT_TIMEPOINT: usize = 3;

const METADATA_FILE: &str = "metadata.json";

/// Contents of a stack directory's `metadata.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackMetadata {
    pub spacing_x: f64,
    pub spacing_y: f64,
    pub num_timepoints: usize,
    pub num_slices: usize,
}

/// A (x, y, slice, time) volume: `images[slice][timepoint]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfusionStack {
    images: Vec<Vec<GrayImage>>,
}

impl PerfusionStack {
    pub fn new(images: Vec<Vec<GrayImage>>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::InvalidImage("stack has no slices".into()));
        }
        let num_timepoints = images[0].len();
        for (s, series) in images.iter().enumerate() {
            if series.is_empty() || series.len() != num_timepoints {
                return Err(Error::InvalidImage(format!(
                    "slice {s} has {} timepoints, expected {num_timepoints} (>= 1)",
                    series.len()
                )));
            }
            let first = &series[0];
            if let Some(bad) = series
                .iter()
                .position(|im| im.dims() != first.dims() || im.spacing() != first.spacing())
            {
                return Err(Error::InvalidImage(format!(
                    "slice {s} timepoint {bad} differs in size or spacing from timepoint 0"
                )));
            }
        }
        Ok(Self { images })
    }

    pub fn num_slices(&self) -> usize {
        self.images.len()
    }

    pub fn num_timepoints(&self) -> usize {
        self.images[0].len()
    }

    pub fn image(&self, slice: usize, timepoint: usize) -> Result<&GrayImage> {
        let series = self.images.get(slice).ok_or(Error::IndexOutOfRange {
            what: "slice",
            index: slice,
            len: self.images.len(),
        })?;
        series.get(timepoint).ok_or(Error::IndexOutOfRange {
            what: "timepoint",
            index: timepoint,
            len: series.len(),
        })
    }

    /// The image the segmentation runs on for one slice position.
    pub fn working_image(&self, slice: usize, timepoint: Option<usize>) -> Result<&GrayImage> {
        self.image(slice, timepoint.unwrap_or(DEFAULT_TIMEPOINT))
    }

    pub fn metadata(&self) -> StackMetadata {
        let (spacing_x, spacing_y) = self.images[0][0].spacing();
        StackMetadata {
            spacing_x,
            spacing_y,
            num_timepoints: self.num_timepoints(),
            num_slices: self.num_slices(),
        }
    }

    /// File name of one image inside a stack directory.
    pub fn image_file_name(slice: usize, timepoint: usize) -> String {
        format!("s{slice}_t{timepoint}.pgm")
    }

    /// Writes `s{slice}_t{time}.pgm` files plus `metadata.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (s, series) in self.images.iter().enumerate() {
            for (t, img) in series.iter().enumerate() {
                let unit = GrayImage::new(img.width(), img.height(), img.data().to_vec())?;
                save_image(&unit, dir.join(Self::image_file_name(s, t)))?;
            }
        }
        let meta_path = dir.join(METADATA_FILE);
        let json = serde_json::to_string_pretty(&self.metadata()).expect("metadata serializes");
        fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
    }

    /// Loads a stack directory written by [`PerfusionStack::save`].
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(METADATA_FILE);
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: StackMetadata =
            serde_json::from_str(&text).map_err(|e| Error::malformed(&meta_path, e.to_string()))?;
        if meta.num_slices == 0 || meta.num_timepoints == 0 {
            return Err(Error::malformed(&meta_path, "stack must have at least one slice and timepoint"));
        }

        let mut images = Vec::with_capacity(meta.num_slices);
        for s in 0..meta.num_slices {
            let mut series = Vec::with_capacity(meta.num_timepoints);
            for t in 0..meta.num_timepoints {
                let path: PathBuf = dir.join(Self::image_file_name(s, t));
                let raw = load_image(&path)?;
                series.push(
                    GrayImage::with_spacing(
                        raw.width(),
                        raw.height(),
                        raw.data().to_vec(),
                        meta.spacing_x,
                        meta.spacing_y,
                    )
                    .map_err(|e| Error::malformed(&meta_path, e.to_string()))?,
                );
            }
            images.push(series);
        }
        Self::new(images)
    }
}
