use super::GrayImage;
use crate::error::{Error, Result};

/// Histogram resolution used for Otsu's method. The bins span the actual
/// `[min, max]` intensity range of the input, not the full 16-bit range.
pub const OTSU_BINS: usize = 256;

/// Otsu threshold of an image.
pub fn otsu_threshold(img: &GrayImage) -> Result<f64> {
    otsu_threshold_values(img.data())
}

/// Otsu threshold of an arbitrary sample set.
///
/// Builds a [`OTSU_BINS`]-bin histogram over `[min, max]`, scans every split
/// point and returns the center of the last bin of the lower class for the
/// split with the largest inter-class variance. Ties go to the lowest threshold.
pub fn otsu_threshold_values(values: &[f64]) -> Result<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if values.is_empty() || !(hi > lo) {
        return Err(Error::NoContrast);
    }
    let width = (hi - lo) / OTSU_BINS as f64;
    let center = |k: usize| lo + (k as f64 + 0.5) * width;

    let mut hist = [0u64; OTSU_BINS];
    for &v in values {
        hist[bin_of(v, lo, width)] += 1;
    }

    let total = values.len() as f64;
    let total_sum: f64 = hist.iter().enumerate().map(|(k, &n)| n as f64 * center(k)).sum();

    let mut best_k = 0;
    let mut best_var = f64::NEG_INFINITY;
    let mut count_below = 0u64;
    let mut sum_below = 0.0;
    for (k, &n) in hist.iter().enumerate().take(OTSU_BINS - 1) {
        count_below += n;
        sum_below += n as f64 * center(k);
        let count_above = values.len() as u64 - count_below;
        if count_below == 0 || count_above == 0 {
            continue;
        }
        let w0 = count_below as f64 / total;
        let w1 = count_above as f64 / total;
        let mu0 = sum_below / count_below as f64;
        let mu1 = (total_sum - sum_below) / count_above as f64;
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if var > best_var {
            best_var = var;
            best_k = k;
        }
    }
    Ok(center(best_k))
}

#[inline]
pub(crate) fn bin_of(v: f64, lo: f64, width: f64) -> usize {
    (((v - lo) / width) as usize).min(OTSU_BINS - 1)
}

/// Means of the pixels at or below `t` and strictly above it.
pub fn otsu_class_means(img: &GrayImage, t: f64) -> Result<(f64, f64)> {
    let (mut n_lo, mut s_lo, mut n_hi, mut s_hi) = (0usize, 0.0, 0usize, 0.0);
    for &v in img.data() {
        if v <= t {
            n_lo += 1;
            s_lo += v;
        } else {
            n_hi += 1;
            s_hi += v;
        }
    }
    if n_lo == 0 {
        return Err(Error::EmptyClass { threshold: t, side: "below" });
    }
    if n_hi == 0 {
        return Err(Error::EmptyClass { threshold: t, side: "above" });
    }
    Ok((s_lo / n_lo as f64, s_hi / n_hi as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level(lo: f64, hi: f64) -> GrayImage {
        GrayImage::from_fn(10, 10, |_, y| if y < 5 { lo } else { hi }).unwrap()
    }

    #[test]
    fn two_level_split_is_exact() {
        let img = two_level(10.0, 200.0);
        let t = otsu_threshold(&img).unwrap();
        assert!(t > 10.0 && t < 200.0);
        let below = img.data().iter().filter(|&&v| v <= t).count();
        assert_eq!(below, 50);
        assert!(img.data().iter().filter(|&&v| v <= t).all(|&v| v == 10.0));
    }

    #[test]
    fn constant_image_has_no_contrast() {
        let img = GrayImage::new(4, 4, vec![42.0; 16]).unwrap();
        assert!(matches!(otsu_threshold(&img), Err(Error::NoContrast)));
    }

    #[test]
    fn ramp_threshold_near_midpoint() {
        let img = GrayImage::from_fn(16, 16, |x, y| (y * 16 + x) as f64).unwrap();
        let t = otsu_threshold(&img).unwrap();
        let bin = 255.0 / OTSU_BINS as f64;
        assert!((t - 127.5).abs() <= bin, "t = {t}");
    }

    #[test]
    fn class_means() {
        let img = two_level(10.0, 200.0);
        assert_eq!(otsu_class_means(&img, 100.0).unwrap(), (10.0, 200.0));
        assert!(matches!(
            otsu_class_means(&img, 5.0),
            Err(Error::EmptyClass { side: "below", .. })
        ));
        assert!(matches!(
            otsu_class_means(&img, 200.0),
            Err(Error::EmptyClass { side: "above", .. })
        ));

        let quad = GrayImage::from_fn(4, 4, |x, _| [0.0, 10.0, 20.0, 200.0][x]).unwrap();
        assert_eq!(otsu_class_means(&quad, 100.0).unwrap(), (10.0, 200.0));
    }
}
