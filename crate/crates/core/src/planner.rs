//! Sinusoidal-like trajectory generation.
//!
//! The tracker moves in constant steps of length `V`. Inside a region it turns by
//! a quarter of a right angle toward the other region; on a detected crossing it
//! turns back by a right angle. A loop test compares the current point with the
//! point `loop_lag` steps back and nudges the heading by `loop_shift` when the
//! trajectory has closed on itself without meeting the boundary.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{GrayImage, Point2D};

/// Default step length as a fraction of the smaller pixel side.
pub const DEFAULT_STEP_FACTOR: f64 = 0.39;

/// Smallest step (fraction of a pixel side) for which the octagon traced by eight
/// equal turns spans a full pixel: `2 sin(pi/8) * 0.5`, rounded up.
pub const MIN_STEP_FACTOR: f64 = 0.3827;

/// Which side of the boundary a point is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    /// Brain tissue.
    Omega1,
    /// Skull, extracranial tissue and background.
    Omega2,
}

impl RegionLabel {
    pub fn flipped(self) -> Self {
        match self {
            RegionLabel::Omega1 => RegionLabel::Omega2,
            RegionLabel::Omega2 => RegionLabel::Omega1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            RegionLabel::Omega1 => 0,
            RegionLabel::Omega2 => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::Omega1 => "omega1",
            RegionLabel::Omega2 => "omega2",
        }
    }
}

/// A direction angle normalized to `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heading(f64);

impl Heading {
    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if t >= TAU {
            t = 0.0;
        }
        Heading(t)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn turned(self, delta: f64) -> Self {
        Heading::new(self.0 + delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Step length `V` in pixel units (pixel units are set by the smaller physical side).
    pub step_length: f64,
    pub turn_in_region: f64,
    pub turn_at_boundary: f64,
    pub loop_shift: f64,
    pub loop_lag: usize,
    pub loop_tolerance: f64,
    pub max_steps: usize,
    /// Starting heading; `None` picks the tangent to the seed scan diagonal.
    pub initial_heading: Option<f64>,
    /// Minimum number of steps before returning to the seed pixel ends the run.
    pub warmup_steps: usize,
    /// Scale the escape turn by how often the same point was already escaped
    /// from recently; without it the walk can lock into a cycle of octagons
    /// that all pass through one pivot.
    pub escalate_loops: bool,
    /// Chebyshev distance, in pixels, at which the seed pixel counts as reached.
    /// 0 demands the exact pixel.
    pub closure_radius: u32,
}

impl PlannerParams {
    /// Defaults for an image: `V = 0.39` pixel sides, `max_steps = 50 (w + h)`.
    pub fn for_image(img: &GrayImage) -> Self {
        Self::with_step_factor(img, DEFAULT_STEP_FACTOR)
    }

    /// `factor` is a fraction of the smaller physical pixel side. The trajectory
    /// lives in pixel-index coordinates, where that side is the unit length, so
    /// the step is `factor` index units whatever the spacing.
    pub fn with_step_factor(img: &GrayImage, factor: f64) -> Self {
        let step_length = factor;
        Self {
            step_length,
            turn_in_region: FRAC_PI_4,
            turn_at_boundary: FRAC_PI_2,
            loop_shift: FRAC_PI_3,
            loop_lag: 8,
            loop_tolerance: step_length / 100.0,
            max_steps: 50 * (img.width() + img.height()),
            initial_heading: None,
            warmup_steps: 20,
            closure_radius: 1,
            escalate_loops: true,
        }
    }

    /// Sets `V` and rescales the loop tolerance with it.
    pub fn set_step_length(&mut self, v: f64) {
        self.step_length = v;
        self.loop_tolerance = v / 100.0;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.step_length.is_finite() && self.step_length > 0.0) {
            return bad(format!("step length must be positive, got {}", self.step_length));
        }
        if self.step_length < MIN_STEP_FACTOR {
            return bad(format!(
                "step length {} is below the minimum {MIN_STEP_FACTOR} pixel sides",
                self.step_length
            ));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if self.loop_lag < 2 {
            return bad(format!("loop_lag must be at least 2, got {}", self.loop_lag));
        }
        if !(self.loop_tolerance >= 0.0) {
            return bad("loop tolerance must be non-negative".into());
        }
        for (name, v) in [
            ("turn_in_region", self.turn_in_region),
            ("turn_at_boundary", self.turn_at_boundary),
            ("loop_shift", self.loop_shift),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        Ok(())
    }
}

/// Heading change for the next step.
///
/// Off the boundary: `+turn_in_region` in Omega1 and `-turn_in_region` in Omega2.
/// At a detected crossing (`label` being the region held just before it):
/// `-turn_at_boundary` out of Omega1, `+turn_at_boundary` out of Omega2.
pub fn heading_step(label: RegionLabel, at_boundary: bool, params: &PlannerParams) -> f64 {
    match (label, at_boundary) {
        (RegionLabel::Omega1, false) => params.turn_in_region,
        (RegionLabel::Omega2, false) => -params.turn_in_region,
        (RegionLabel::Omega1, true) => -params.turn_at_boundary,
        (RegionLabel::Omega2, true) => params.turn_at_boundary,
    }
}

/// Fixed-capacity history of the most recent trajectory points.
#[derive(Debug, Clone)]
pub struct PointHistory {
    points: VecDeque<Point2D>,
    capacity: usize,
}

impl PointHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            points: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, p: Point2D) {
        if self.points.len() == self.capacity {
            self.points.pop_front();
        }
        self.points.push_back(p);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The point `lag` pushes ago (`lag = 1` is the most recent).
    pub fn back(&self, lag: usize) -> Option<Point2D> {
        if lag == 0 || lag > self.points.len() {
            return None;
        }
        self.points.get(self.points.len() - lag).copied()
    }
}

/// Escape turn for a trajectory that has come full circle: `-loop_shift` in
/// Omega1, `+loop_shift` in Omega2, zero when `current` is not within
/// `loop_tolerance` of the point `loop_lag` steps back.
pub fn loop_correction(
    history: &PointHistory,
    current: Point2D,
    label: RegionLabel,
    params: &PlannerParams,
) -> f64 {
    match history.back(params.loop_lag) {
        Some(old) if current.distance(old) <= params.loop_tolerance => match label {
            RegionLabel::Omega1 => -params.loop_shift,
            RegionLabel::Omega2 => params.loop_shift,
        },
        _ => 0.0,
    }
}

/// One constant-length step along `theta`.
#[inline]
pub fn advance(position: Point2D, theta: f64, step: f64) -> Point2D {
    let (s, c) = theta.sin_cos();
    Point2D::new(position.x + step * c, position.y + step * s)
}
