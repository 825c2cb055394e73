//! Image containers, PGM I/O, bilinear sampling and Otsu thresholding.

mod otsu;
pub mod pgm;
mod stack;

pub use otsu::{otsu_class_means, otsu_threshold, otsu_threshold_values, OTSU_BINS};
pub use pgm::{load_image, save_image, save_mask};
pub use stack::{PerfusionStack, StackMetadata, DEFAULT_TIMEPOINT};

use crate::error::{Error, Result};

/// A continuous position in pixel coordinates. Pixel `(i, j)` has its center at `(i, j)`;
/// `x` grows to the right (columns) and `y` grows downward (rows).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Index of the pixel whose center is nearest to this point.
    pub fn pixel(self) -> (i64, i64) {
        (self.x.round() as i64, self.y.round() as i64)
    }
}

/// Row-major 2D intensity grid with physical pixel spacing in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    spacing_x: f64,
    spacing_y: f64,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_spacing(width, height, data, 1.0, 1.0)
    }

    pub fn with_spacing(
        width: usize,
        height: usize,
        data: Vec<f64>,
        spacing_x: f64,
        spacing_y: f64,
    ) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::InvalidImage(format!(
                "image must be at least 3x3, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if !(spacing_x > 0.0 && spacing_x.is_finite() && spacing_y > 0.0 && spacing_y.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "pixel spacing must be positive, got {spacing_x}x{spacing_y}"
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidImage(format!("intensity {bad} is not finite and non-negative")));
        }
        Ok(Self {
            width,
            height,
            data,
            spacing_x,
            spacing_y,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.spacing_x, self.spacing_y)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Bilinear interpolation between the four surrounding pixel centers.
    ///
    /// Coordinates are clamped into `[0, width-1] x [0, height-1]` first, so probing
    /// past the border returns the nearest edge value.
    pub fn sample_bilinear(&self, p: Point2D) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = if p.x.is_nan() { 0.0 } else { p.x.clamp(0.0, max_x) };
        let y = if p.y.is_nan() { 0.0 } else { p.y.clamp(0.0, max_y) };

        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;

        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// True when the integer pixel nearest to `p` lies on (or beyond) the image edge.
    pub fn touches_border(&self, p: Point2D) -> bool {
        let (px, py) = p.pixel();
        px <= 0 || py <= 0 || px >= self.width as i64 - 1 || py >= self.height as i64 - 1
    }
}
