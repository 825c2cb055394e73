//! Deterministic synthetic head phantoms with analytic ground truth.
//!
//! A phantom is three nested regions: background outside an outer ellipse, a
//! bright ring (scalp/skull) between the outer and inner ellipse, and an interior
//! (brain) that may carry circular lesions. Each timepoint gets fresh Gaussian
//! noise; from timepoint 5 on the interior darkens to mimic contrast passage.
//!
//! Noise comes from PCG-XSL-RR 128/64 (`rand_pcg::Pcg64`) seeded with
//! `seed_from_u64`, mapped to uniforms with the top 53 bits and to normals with
//! the Box–Muller transform, so a seed produces the same images everywhere.
//! Samples are rounded to integers and clamped to `[0, 65535]` as a 16-bit
//! scanner export would be.

use rand_core::{RngCore, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{GrayImage, PerfusionStack, Point2D};
use crate::mask::BinaryMask;

/// First timepoint affected by the contrast bolus.
pub const BOLUS_START: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: Point2D,
    pub semi_x: f64,
    pub semi_y: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let u = (x - self.center.x) / self.semi_x;
        let v = (y - self.center.y) / self.semi_y;
        u * u + v * v <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lesion {
    pub center: Point2D,
    pub radius: f64,
    pub delta: f64,
}

/// Which ellipse defines the ground-truth ROI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthRegion {
    #[default]
    Outer,
    Inner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub background_mean: f64,
    pub interior_mean: f64,
    pub ring_mean: f64,
    pub outer: Ellipse,
    pub inner: Ellipse,
    pub lesions: Vec<Lesion>,
    pub noise_sigma: f64,
    pub num_timepoints: usize,
    pub bolus_dip_fraction: f64,
    pub rng_seed: u64,
    pub truth: TruthRegion,
    pub spacing: (f64, f64),
}

impl Default for PhantomSpec {
    /// 128x128 head on a 0-1000 scale: background 100, ring 700, interior 450,
    /// noise sigma 20, one bright lesion.
    fn default() -> Self {
        let center = Point2D::new(63.5, 63.5);
        Self {
            width: 128,
            height: 128,
            background_mean: 100.0,
            interior_mean: 450.0,
            ring_mean: 700.0,
            outer: Ellipse { center, semi_x: 50.0, semi_y: 58.0 },
            inner: Ellipse { center, semi_x: 43.0, semi_y: 51.0 },
            lesions: vec![Lesion {
                center: Point2D::new(78.0, 52.0),
                radius: 8.0,
                delta: 250.0,
            }],
            noise_sigma: 20.0,
            num_timepoints: 40,
            bolus_dip_fraction: 0.3,
            rng_seed: 0x5EED_0001,
            truth: TruthRegion::Outer,
            spacing: (1.0, 1.0),
        }
    }
}

fn ellipse_inside(inner: &Ellipse, outer: &Ellipse) -> bool {
    // sample the inner boundary densely; every point must be strictly inside the outer one
    (0..720).all(|k| {
        let a = k as f64 * std::f64::consts::TAU / 720.0;
        let x = inner.center.x + inner.semi_x * a.cos();
        let y = inner.center.y + inner.semi_y * a.sin();
        let u = (x - outer.center.x) / outer.semi_x;
        let v = (y - outer.center.y) / outer.semi_y;
        u * u + v * v < 1.0
    })
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.width < 3 || self.height < 3 {
            return bad("image must be at least 3x3");
        }
        for e in [&self.outer, &self.inner] {
            if !(e.semi_x > 0.0 && e.semi_y > 0.0) {
                return bad("ellipse semi-axes must be positive");
            }
        }
        let o = &self.outer;
        if !(o.center.x - o.semi_x > 0.0
            && o.center.y - o.semi_y > 0.0
            && o.center.x + o.semi_x < (self.width - 1) as f64
            && o.center.y + o.semi_y < (self.height - 1) as f64)
        {
            return bad("outer ellipse must lie strictly inside the image");
        }
        if !ellipse_inside(&self.inner, &self.outer) {
            return bad("inner ellipse must lie strictly inside the outer ellipse");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be non-negative");
        }
        if [self.background_mean, self.interior_mean, self.ring_mean]
            .iter()
            .any(|m| !(*m >= 0.0))
        {
            return bad("region means must be non-negative");
        }
        if !(0.0..1.0).contains(&self.bolus_dip_fraction) {
            return bad("bolus_dip_fraction must be in [0, 1)");
        }
        if self.num_timepoints == 0 {
            return bad("num_timepoints must be at least 1");
        }
        if !(self.spacing.0 > 0.0 && self.spacing.1 > 0.0) {
            return bad("spacing must be positive");
        }
        Ok(())
    }

    /// Noise-free intensity at pixel `(x, y)` for timepoint `t`.
    pub fn clean_value(&self, x: usize, y: usize, t: usize) -> f64 {
        let (fx, fy) = (x as f64, y as f64);
        if !self.outer.contains(fx, fy) {
            return self.background_mean;
        }
        if !self.inner.contains(fx, fy) {
            return self.ring_mean;
        }
        let lesions: f64 = self
            .lesions
            .iter()
            .filter(|l| (fx - l.center.x).hypot(fy - l.center.y) <= l.radius)
            .map(|l| l.delta)
            .sum();
        let v = self.interior_mean + lesions;
        if t >= BOLUS_START { v * (1.0 - self.bolus_dip_fraction) } else { v }
    }

    pub fn ground_truth(&self) -> BinaryMask {
        let region = match self.truth {
            TruthRegion::Outer => &self.outer,
            TruthRegion::Inner => &self.inner,
        };
        BinaryMask::from_fn(self.width, self.height, |x, y| region.contains(x as f64, y as f64))
    }
}

/// Standard normal deviates via Box–Muller on a PCG64 stream.
pub struct GaussianSource {
    rng: Pcg64,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Pcg64::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1], keeps ln finite
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Builds a single-slice stack and its ground-truth mask.
pub fn generate(spec: &PhantomSpec) -> Result<(PerfusionStack, BinaryMask)> {
    spec.validate()?;
    let mut noise = GaussianSource::new(spec.rng_seed);
    let mut series = Vec::with_capacity(spec.num_timepoints);
    for t in 0..spec.num_timepoints {
        let mut data = Vec::with_capacity(spec.width * spec.height);
        for y in 0..spec.height {
            for x in 0..spec.width {
                let v = spec.clean_value(x, y, t) + spec.noise_sigma * noise.standard_normal();
                data.push(v.round().clamp(0.0, 65535.0));
            }
        }
        series.push(GrayImage::with_spacing(spec.width, spec.height, data, spec.spacing.0, spec.spacing.1)?);
    }
    Ok((PerfusionStack::new(vec![series])?, spec.ground_truth()))
}
