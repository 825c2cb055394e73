//! Initial boundary point detection.
//!
//! The scan starts in one image corner and walks the diagonal toward the image
//! center one pixel at a time. The first pixel whose 3x3 neighborhood mean exceeds
//! the threshold is the seed. Border pixels are skipped so the neighborhood never
//! needs padding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{GrayImage, Point2D};

/// Corner the diagonal scan starts from. Rows grow downward, so `BottomLeft`
/// is column 0, row `height - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corner {
    #[default]
    BottomLeft,
    BottomRight,
    TopLeft,
    TopRight,
}

impl Corner {
    /// Unit pixel step from the corner toward the image center.
    pub fn direction(self) -> (i64, i64) {
        match self {
            Corner::BottomLeft => (1, -1),
            Corner::BottomRight => (-1, -1),
            Corner::TopLeft => (1, 1),
            Corner::TopRight => (-1, 1),
        }
    }

    /// Heading (radians, pixel coordinates) tangent to the scan diagonal such
    /// that the tracker circles the image center counterclockwise as displayed
    /// with rows growing downward.
    pub fn initial_heading(self) -> f64 {
        let (dx, dy) = self.direction();
        (dy as f64).atan2(dx as f64) + std::f64::consts::FRAC_PI_2
    }
}

impl std::str::FromStr for Corner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bottom-left" => Ok(Corner::BottomLeft),
            "bottom-right" => Ok(Corner::BottomRight),
            "top-left" => Ok(Corner::TopLeft),
            "top-right" => Ok(Corner::TopRight),
            other => Err(format!("unknown corner {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedConfig {
    pub corner: Corner,
}

/// Integer pixels visited by the diagonal scan, in order.
pub fn scan_diagonal(width: usize, height: usize, corner: Corner) -> Vec<(usize, usize)> {
    let (dx, dy) = corner.direction();
    let (w, h) = (width as i64, height as i64);
    let mut x = if dx > 0 { 1 } else { w - 2 };
    let mut y = if dy > 0 { 1 } else { h - 2 };
    // stop once either coordinate passes the image center
    let cx = (w - 1) as f64 / 2.0;
    let cy = (h - 1) as f64 / 2.0;
    let mut out = Vec::new();
    loop {
        if x < 1 || y < 1 || x > w - 2 || y > h - 2 {
            break;
        }
        let past_x = if dx > 0 { x as f64 > cx } else { (x as f64) < cx };
        let past_y = if dy > 0 { y as f64 > cy } else { (y as f64) < cy };
        if past_x || past_y {
            break;
        }
        out.push((x as usize, y as usize));
        x += dx;
        y += dy;
    }
    out
}

/// Mean of the 3x3 neighborhood centered on an interior pixel.
pub fn neighborhood_mean(img: &GrayImage, x: usize, y: usize) -> f64 {
    let mut sum = 0.0;
    for yy in y - 1..=y + 1 {
        for xx in x - 1..=x + 1 {
            sum += img.get(xx, yy);
        }
    }
    sum / 9.0
}

/// First diagonal pixel whose 3x3 mean strictly exceeds `threshold`.
pub fn find_initial_point(img: &GrayImage, threshold: f64, config: &SeedConfig) -> Result<Point2D> {
    scan_diagonal(img.width(), img.height(), config.corner)
        .into_iter()
        .find(|&(x, y)| neighborhood_mean(img, x, y) > threshold)
        .map(|(x, y)| Point2D::new(x as f64, y as f64))
        .ok_or(Error::SeedNotFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn disk(w: usize, h: usize, r: f64) -> GrayImage {
        let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
        GrayImage::from_fn(w, h, |x, y| {
            if (x as f64 - cx).hypot(y as f64 - cy) <= r { 200.0 } else { 10.0 }
        })
        .unwrap()
    }

    #[test]
    fn bright_disk_seed_is_first_supra_threshold() {
        let img = disk(64, 64, 20.0);
        let t = 105.0;
        let seed = find_initial_point(&img, t, &SeedConfig::default()).unwrap();

        // independent re-scan: x = k, y = h-1-k
        let mut expected = None;
        for k in 1..32 {
            let (x, y) = (k, 63 - k);
            let mut s = 0.0;
            for j in 0..3 {
                for i in 0..3 {
                    s += img.get(x + i - 1, y + j - 1);
                }
            }
            if s / 9.0 > t {
                expected = Some((x, y));
                break;
            }
        }
        let (ex, ey) = expected.unwrap();
        assert_eq!(seed, Point2D::new(ex as f64, ey as f64));
        assert!(neighborhood_mean(&img, ex, ey) > t);
    }

    #[test]
    fn dark_image_has_no_seed() {
        let img = GrayImage::new(16, 16, vec![5.0; 256]).unwrap();
        assert!(matches!(
            find_initial_point(&img, 10.0, &SeedConfig::default()),
            Err(Error::SeedNotFound)
        ));
    }

    #[test]
    fn bright_image_seeds_at_first_interior_pixel() {
        let img = GrayImage::new(20, 12, vec![50.0; 240]).unwrap();
        let cfg = |corner| SeedConfig { corner };
        assert_eq!(find_initial_point(&img, 1.0, &cfg(Corner::BottomLeft)).unwrap(), Point2D::new(1.0, 10.0));
        assert_eq!(find_initial_point(&img, 1.0, &cfg(Corner::TopRight)).unwrap(), Point2D::new(18.0, 1.0));
        assert_eq!(find_initial_point(&img, 1.0, &cfg(Corner::TopLeft)).unwrap(), Point2D::new(1.0, 1.0));
        assert_eq!(find_initial_point(&img, 1.0, &cfg(Corner::BottomRight)).unwrap(), Point2D::new(18.0, 10.0));
    }

    #[test]
    fn scan_stops_at_center_on_non_square_images() {
        let pts = scan_diagonal(20, 12, Corner::BottomLeft);
        assert_eq!(pts.first(), Some(&(1, 10)));
        // y reaches the center row 5.5 first
        assert_eq!(pts.last(), Some(&(5, 6)));
        assert!(pts.windows(2).all(|w| w[1].0 == w[0].0 + 1 && w[1].1 + 1 == w[0].1));
    }

    #[test]
    fn initial_headings_are_tangent() {
        assert!((Corner::BottomLeft.initial_heading() - FRAC_PI_4).abs() < 1e-12);
        for c in [Corner::BottomLeft, Corner::BottomRight, Corner::TopLeft, Corner::TopRight] {
            let (dx, dy) = c.direction();
            let th = c.initial_heading();
            assert!((th.cos() * dx as f64 + th.sin() * dy as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn raising_threshold_never_moves_seed_toward_corner() {
        let img = GrayImage::from_fn(48, 48, |x, y| ((x * 7 + (47 - y) * 5) % 97) as f64 * 3.0 + (x as f64)).unwrap();
        let diag = scan_diagonal(48, 48, Corner::BottomLeft);
        let pos = |t: f64| {
            find_initial_point(&img, t, &SeedConfig::default())
                .ok()
                .map(|p| diag.iter().position(|&(x, y)| (x as f64, y as f64) == (p.x, p.y)).unwrap())
        };
        let mut last = 0;
        for t in (0..400).step_by(10) {
            match pos(t as f64) {
                Some(i) => {
                    assert!(i >= last);
                    last = i;
                }
                None => break,
            }
        }
    }
}
