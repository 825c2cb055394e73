//! Seed -> trajectory -> CUSUM orchestration.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cusum::{CusumConfig, CusumDetector, Fallbacks};
use crate::error::{Error, Result};
use crate::imaging::{otsu_class_means, otsu_threshold, GrayImage, Point2D};
use crate::planner::{advance, heading_step, loop_correction, Heading, PlannerParams, PointHistory, RegionLabel};
use crate::seed::{find_initial_point, SeedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Came back to the seed pixel after the warm-up.
    ClosedAtSeed,
    /// Reached a pixel on the image edge.
    HitBorder,
    /// Ran out of steps.
    MaxSteps,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ClosedAtSeed => "ClosedAtSeed",
            Termination::HitBorder => "HitBorder",
            Termination::MaxSteps => "MaxSteps",
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub position: Point2D,
    pub intensity: f64,
    /// Cumulative sum after the update (post-reset on alarm).
    pub sum: f64,
    pub threshold: f64,
    /// Region label in effect when the sample was scored.
    pub label: RegionLabel,
    pub alarm: bool,
    pub mu1: f64,
    pub mu2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub seed: Point2D,
    pub change_points: Vec<Point2D>,
    /// Every sampled position, starting with the seed.
    pub visited: Vec<Point2D>,
    /// Filled only when [`TrackerOptions::record_steps`] is set.
    pub steps: Vec<TraceStep>,
    pub termination: Termination,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackerOptions {
    pub cusum: CusumConfig,
    pub record_steps: bool,
}

/// Everything the tracker needs from the image before it starts moving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageStats {
    pub otsu_threshold: f64,
    pub otsu_means: (f64, f64),
    pub min: f64,
    pub max: f64,
}

impl ImageStats {
    pub fn compute(img: &GrayImage) -> Result<Self> {
        let otsu = otsu_threshold(img)?;
        let means = otsu_class_means(img, otsu)?;
        let (min, max) = img.min_max();
        Ok(Self {
            otsu_threshold: otsu,
            otsu_means: means,
            min,
            max,
        })
    }

    fn fallbacks(&self) -> Fallbacks {
        Fallbacks {
            otsu_threshold: self.otsu_threshold,
            otsu_means: self.otsu_means,
            dynamic_range: self.max - self.min,
        }
    }
}

/// Tracks the boundary starting at `seed`.
///
/// Each iteration samples the current point, feeds the CUSUM detector, records a
/// change point on alarm, turns and steps forward. The run ends when the tracker
/// comes back within `closure_radius` pixels of the seed pixel (after
/// `warmup_steps`, and only once it has been farther away), touches the image
/// edge, or exhausts `max_steps`; the last case is an error carrying the partial
/// trace.
///
/// The seed sits about a pixel inside the edge, while the settled zig-zag runs
/// along the edge itself, so exact pixel equality is often missed by one pixel.
pub fn run_tracker(
    img: &GrayImage,
    seed: Point2D,
    initial_heading: f64,
    params: &PlannerParams,
    options: &TrackerOptions,
) -> Result<BoundaryTrace> {
    params.validate()?;
    let (w, h) = (img.width() as f64, img.height() as f64);
    if !(seed.x >= 0.0 && seed.y >= 0.0 && seed.x <= w - 1.0 && seed.y <= h - 1.0) {
        return Err(Error::InvalidParams(format!("seed ({}, {}) outside the image", seed.x, seed.y)));
    }
    let stats = ImageStats::compute(img)?;

    let mut heading = Heading::new(params.initial_heading.unwrap_or(initial_heading));
    let first = advance(seed, heading.radians(), params.step_length);
    let initial_label = if img.sample_bilinear(first) > stats.otsu_threshold {
        RegionLabel::Omega1
    } else {
        RegionLabel::Omega2
    };
    let mut detector = CusumDetector::new(initial_label, stats.fallbacks(), &options.cusum)?;
    let mut history = PointHistory::new(params.loop_lag + 1);
    let seed_pixel = seed.pixel();
    let near_seed = |p: Point2D| {
        let (x, y) = p.pixel();
        (x - seed_pixel.0).abs().max((y - seed_pixel.1).abs()) <= i64::from(params.closure_radius)
    };
    // (step, point) of recent loop escapes
    let mut escapes: std::collections::VecDeque<(usize, Point2D)> = Default::default();
    // closing is armed once the walk has left the seed's neighborhood
    let mut left_seed = false;

    let mut position = seed;
    let mut change_points = Vec::new();
    let mut visited = vec![seed];
    let mut steps = Vec::new();
    let mut termination = Termination::MaxSteps;

    for k in 0..params.max_steps {
        let intensity = img.sample_bilinear(position);
        let label_before = detector.label();
        let update = detector.update(intensity)?;
        if update.alarm {
            change_points.push(position);
        }
        if options.record_steps {
            steps.push(TraceStep {
                step: k,
                position,
                intensity,
                sum: update.sum,
                threshold: update.threshold,
                label: label_before,
                alarm: update.alarm,
                mu1: update.mu1,
                mu2: update.mu2,
            });
        }

        let mut correction = loop_correction(&history, position, detector.label(), params);
        if correction != 0.0 {
            if params.escalate_loops {
                let memory = 4 * params.loop_lag;
                while escapes.front().is_some_and(|&(j, _)| j + memory < k) {
                    escapes.pop_front();
                }
                let repeats = escapes
                    .iter()
                    .filter(|(_, p)| p.distance(position) <= params.loop_tolerance)
                    .count();
                correction *= (repeats + 1) as f64;
            }
            escapes.push_back((k, position));
        }
        let turn = heading_step(label_before, update.alarm, params) + correction;
        history.push(position);
        heading = heading.turned(turn);
        position = advance(position, heading.radians(), params.step_length);
        visited.push(position);

        if img.touches_border(position) {
            termination = Termination::HitBorder;
            break;
        }
        let near = near_seed(position);
        if k + 1 >= params.warmup_steps && left_seed && near {
            termination = Termination::ClosedAtSeed;
            break;
        }
        left_seed |= !near;
    }

    let trace = BoundaryTrace {
        seed,
        change_points,
        visited,
        steps,
        termination,
    };
    if termination == Termination::MaxSteps {
        return Err(Error::TrackerDiverged {
            max_steps: params.max_steps,
            partial: Box::new(trace),
        });
    }
    Ok(trace)
}

/// Full automatic pipeline for one image: Otsu seed search, then tracking.
///
/// `seed_override` skips the diagonal scan. Without an explicit heading in
/// `params`, the tracker starts tangent to the scan diagonal of `seed_config`.
pub fn segment_boundary(
    img: &GrayImage,
    seed_config: &SeedConfig,
    seed_override: Option<Point2D>,
    params: &PlannerParams,
    options: &TrackerOptions,
) -> Result<BoundaryTrace> {
    let otsu = otsu_threshold(img)?;
    let seed = match seed_override {
        Some(p) => p,
        None => find_initial_point(img, otsu, seed_config)?,
    };
    run_tracker(img, seed, seed_config.corner.initial_heading(), params, options)
}

/// Writes recorded steps as `step,x,y,intensity,S,h,label,alarm` CSV.
pub fn write_trace_csv(steps: &[TraceStep], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "step,x,y,intensity,S,h,label,alarm")?;
    for s in steps {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.step,
            s.position.x,
            s.position.y,
            s.intensity,
            s.sum,
            s.threshold,
            s.label.as_str(),
            u8::from(s.alarm)
        )?;
    }
    Ok(())
}
