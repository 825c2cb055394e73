//! Overlap scores against a reference mask and the brute-force threshold baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::mask::BinaryMask;

/// Pixel confusion counts; reference unity is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegMetrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub dice: f64,
    pub tpf: f64,
    pub tnf: f64,
    pub acc: f64,
    /// Set when any ratio had a zero denominator and was reported as 1.
    pub degenerate: bool,
}

pub fn confusion(mask: &BinaryMask, reference: &BinaryMask) -> Result<Confusion> {
    if mask.dims() != reference.dims() {
        return Err(Error::DimensionMismatch {
            left: mask.dims(),
            right: reference.dims(),
        });
    }
    let mut c = Confusion::default();
    for (&m, &r) in mask.bits().iter().zip(reference.bits()) {
        match (m, r) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Dice, sensitivity (TPF), specificity (TNF) and accuracy from counts.
/// A `0/0` ratio is reported as 1 and sets `degenerate`.
pub fn derive_metrics(c: Confusion) -> Result<SegMetrics> {
    if c.total() == 0 {
        return Err(Error::EmptyImage);
    }
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            degenerate = true;
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    let dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    let tpf = ratio(c.tp, c.tp + c.fn_);
    let tnf = ratio(c.tn, c.tn + c.fp);
    let acc = ratio(c.tp + c.tn, c.total());
    Ok(SegMetrics {
        tp: c.tp,
        fp: c.fp,
        tn: c.tn,
        fn_: c.fn_,
        dice,
        tpf,
        tnf,
        acc,
        degenerate,
    })
}

pub fn evaluate(mask: &BinaryMask, reference: &BinaryMask) -> Result<SegMetrics> {
    derive_metrics(confusion(mask, reference)?)
}

/// Which side of the threshold is labelled unity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    /// `pixel >= t`
    Above,
    /// `pixel <= t`
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub threshold: f64,
    pub polarity: Polarity,
    pub metrics: SegMetrics,
}

pub fn threshold_mask(img: &GrayImage, t: f64, polarity: Polarity) -> BinaryMask {
    BinaryMask::from_bits(
        img.width(),
        img.height(),
        img.data()
            .iter()
            .map(|&v| match polarity {
                Polarity::Above => v >= t,
                Polarity::Below => v <= t,
            })
            .collect(),
    )
}

/// Best global threshold in hindsight: tries every distinct intensity with both
/// polarities and keeps the highest Dice against `reference`. Ties go to the
/// lower threshold, then to [`Polarity::Above`].
pub fn best_threshold_baseline(img: &GrayImage, reference: &BinaryMask) -> Result<BaselineResult> {
    if img.dims() != reference.dims() {
        return Err(Error::DimensionMismatch {
            left: img.dims(),
            right: reference.dims(),
        });
    }
    let mut pixels: Vec<(f64, bool)> = img.data().iter().copied().zip(reference.bits().iter().copied()).collect();
    pixels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = pixels.len() as u64;
    let positives = pixels.iter().filter(|p| p.1).count() as u64;

    // runs of equal intensity: (value, pixels in run, reference positives in run)
    let mut runs: Vec<(f64, u64, u64)> = Vec::new();
    for &(v, r) in &pixels {
        match runs.last_mut() {
            Some(last) if last.0 == v => {
                last.1 += 1;
                last.2 += u64::from(r);
            }
            _ => runs.push((v, 1, u64::from(r))),
        }
    }

    let dice_of = |pred: u64, tp: u64| {
        let den = pred + positives;
        if den == 0 { 1.0 } else { 2.0 * tp as f64 / den as f64 }
    };

    // Above: pixels >= runs[i].0, i.e. everything from run i on
    let mut above_pred = total;
    let mut above_tp = positives;
    // Below: pixels <= runs[i].0
    let mut below_pred = 0;
    let mut below_tp = 0;

    let mut best: Option<(f64, Polarity, f64)> = None;
    for &(v, n, pos) in &runs {
        below_pred += n;
        below_tp += pos;
        for (polarity, d) in [
            (Polarity::Above, dice_of(above_pred, above_tp)),
            (Polarity::Below, dice_of(below_pred, below_tp)),
        ] {
            if best.is_none_or(|(_, _, bd)| d > bd) {
                best = Some((v, polarity, d));
            }
        }
        above_pred -= n;
        above_tp -= pos;
    }

    let (threshold, polarity, _) = best.expect("image has at least one pixel");
    let metrics = evaluate(&threshold_mask(img, threshold, polarity), reference)?;
    Ok(BaselineResult {
        threshold,
        polarity,
        metrics,
    })
}
