//! Streaming change-point detection over the intensities sampled along the
//! trajectory.
//!
//! The statistic is a one-sided cumulative sum of score values
//! `G_j = I - mu_j`, where `mu_j` is the mean of the last `q` intensities seen in
//! the region the tracker currently believes it is in. Inside Omega1 the sum
//! grows when intensities drop below `mu_1`; inside Omega2 it grows when they
//! rise above `mu_2`. Each alarm flips the region label.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::RegionLabel;

/// Number of most recent samples averaged for each region mean.
pub const DEFAULT_WINDOW: usize = 45;

/// Fraction of the image dynamic range below which `h` is treated as degenerate.
pub const DEFAULT_H_MIN_FRACTION: f64 = 1e-6;

/// What the cumulative sum restarts from after the second and later alarms.
/// The first alarm always restarts from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResetMode {
    /// Always restart at zero.
    Zero,
    /// Half of the sum that just crossed the threshold.
    #[default]
    HalfCurrent,
    /// Half of the sum that crossed the threshold at the previous alarm.
    HalfPrevious,
}

impl std::str::FromStr for ResetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(ResetMode::Zero),
            "half-current" => Ok(ResetMode::HalfCurrent),
            "half-previous" => Ok(ResetMode::HalfPrevious),
            other => Err(format!("unknown reset mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumConfig {
    pub window: usize,
    pub reset_mode: ResetMode,
    pub h_min_fraction: f64,
}

impl Default for CusumConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            reset_mode: ResetMode::default(),
            h_min_fraction: DEFAULT_H_MIN_FRACTION,
        }
    }
}

/// Image-derived values the detector falls back on until its windows fill.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fallbacks {
    /// Global Otsu threshold, used as `h` until both windows are full.
    pub otsu_threshold: f64,
    /// `(mean at or below threshold, mean above threshold)`.
    pub otsu_means: (f64, f64),
    /// `max - min` of the image intensities; scales the `h` floor.
    pub dynamic_range: f64,
}

/// Result of one [`CusumDetector::update`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Update {
    /// Cumulative sum after this sample (after the reset, on alarm).
    pub sum: f64,
    /// Sum before any reset; equals `sum` when there was no alarm.
    pub exceeding_sum: f64,
    /// Threshold the sum was compared with.
    pub threshold: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub alarm: bool,
}

#[derive(Debug, Clone)]
struct Window {
    samples: VecDeque<f64>,
    capacity: usize,
    sum: f64,
}

impl Window {
    fn new(capacity: usize) -> Self {
        Self {
            samples: VecDeque::with_capacity(capacity),
            capacity,
            sum: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(v);
        // recomputed rather than running so the mean never drifts
        self.sum = self.samples.iter().sum();
    }

    fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    fn mean(&self) -> Option<f64> {
        (!self.samples.is_empty()).then(|| self.sum / self.samples.len() as f64)
    }
}

/// Single-owner CUSUM state for one trajectory.
#[derive(Debug, Clone)]
pub struct CusumDetector {
    sum: f64,
    windows: [Window; 2],
    label: RegionLabel,
    threshold: f64,
    fallbacks: Fallbacks,
    h_min: f64,
    reset_mode: ResetMode,
    step: usize,
    alarms: Vec<usize>,
    last_exceeding: Option<f64>,
}

impl CusumDetector {
    pub fn new(label: RegionLabel, fallbacks: Fallbacks, config: &CusumConfig) -> Result<Self> {
        if config.window == 0 {
            return Err(Error::InvalidParams("CUSUM window must hold at least one sample".into()));
        }
        if !(config.h_min_fraction >= 0.0) {
            return Err(Error::InvalidParams("h_min_fraction must be non-negative".into()));
        }
        Ok(Self {
            sum: 0.0,
            windows: [Window::new(config.window), Window::new(config.window)],
            label,
            threshold: fallbacks.otsu_threshold,
            fallbacks,
            h_min: config.h_min_fraction * fallbacks.dynamic_range,
            reset_mode: config.reset_mode,
            step: 0,
            alarms: Vec::new(),
            last_exceeding: None,
        })
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn label(&self) -> RegionLabel {
        self.label
    }

    /// Threshold used by the most recent update.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Indices (1-based sample counts) at which alarms fired.
    pub fn alarms(&self) -> &[usize] {
        &self.alarms
    }

    pub fn samples_seen(&self) -> usize {
        self.step
    }

    /// Mean of the region's window, or its Otsu class mean while the window is empty.
    pub fn region_mean(&self, region: RegionLabel) -> f64 {
        self.windows[region.index()].mean().unwrap_or(match region {
            RegionLabel::Omega1 => self.fallbacks.otsu_means.1,
            RegionLabel::Omega2 => self.fallbacks.otsu_means.0,
        })
    }

    /// Feeds the next intensity.
    pub fn update(&mut self, intensity: f64) -> Result<Update> {
        self.step += 1;
        let mu1 = self.region_mean(RegionLabel::Omega1);
        let mu2 = self.region_mean(RegionLabel::Omega2);
        let h = if self.windows.iter().all(Window::is_full) {
            threshold_h(mu1, mu2, self.h_min)?
        } else {
            check_floor(self.fallbacks.otsu_threshold, self.h_min)?
        };
        self.threshold = h;

        let increment = match self.label {
            RegionLabel::Omega1 => -score(intensity, mu1),
            RegionLabel::Omega2 => score(intensity, mu2),
        };
        let exceeding = (self.sum + increment).max(0.0);
        let alarm = exceeding > h;

        if alarm {
            self.alarms.push(self.step);
            self.sum = fir_reset(self.reset_mode, self.alarms.len(), exceeding, self.last_exceeding, h);
            self.last_exceeding = Some(exceeding);
            self.label = self.label.flipped();
        } else {
            self.sum = exceeding;
            self.windows[self.label.index()].push(intensity);
        }

        Ok(Update {
            sum: self.sum,
            exceeding_sum: exceeding,
            threshold: h,
            mu1,
            mu2,
            alarm,
        })
    }
}

/// Score of a sample against a region mean.
#[inline]
pub fn score(intensity: f64, mean: f64) -> f64 {
    intensity - mean
}

/// `h = |mu1 - mu2|`, rejected when it falls below `h_min`.
pub fn threshold_h(mu1: f64, mu2: f64, h_min: f64) -> Result<f64> {
    check_floor((mu1 - mu2).abs(), h_min)
}

fn check_floor(h: f64, h_min: f64) -> Result<f64> {
    // a zero threshold would alarm on every sample
    if !(h > 0.0) || h < h_min {
        return Err(Error::DegenerateThreshold { h, h_min });
    }
    Ok(h)
}

/// Sum to restart from after the `alarm_number`-th alarm (1-based).
///
/// A halved sum that would still be at or above `h` restarts at `h / 2`
/// instead; otherwise the next in-region sample would alarm again.
pub fn fir_reset(
    mode: ResetMode,
    alarm_number: usize,
    exceeding: f64,
    previous_exceeding: Option<f64>,
    h: f64,
) -> f64 {
    if alarm_number <= 1 {
        return 0.0;
    }
    let half = match mode {
        ResetMode::Zero => return 0.0,
        ResetMode::HalfCurrent => 0.5 * exceeding,
        ResetMode::HalfPrevious => 0.5 * previous_exceeding.unwrap_or(0.0),
    };
    if half >= h { 0.5 * h } else { half }
}
