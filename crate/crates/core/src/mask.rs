//! Boundary trace -> binary ROI mask.
//!
//! Change points are rasterized to their nearest pixels and joined with
//! 8-connected line segments. The exterior is flood-filled (4-connectivity)
//! from every non-contour border pixel; everything not reached is unity.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::segmenter::{BoundaryTrace, Termination};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "mask size mismatch");
        Self { width, height, bits }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
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

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Number of 4-connected components of unity pixels.
    pub fn components(&self) -> usize {
        let mut seen = vec![false; self.bits.len()];
        let mut count = 0;
        for start in 0..self.bits.len() {
            if !self.bits[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for j in neighbors4(i, self.width, self.height) {
                    if self.bits[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        count
    }
}

fn neighbors4(i: usize, width: usize, height: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i % width, i / width);
    [
        (x > 0).then(|| i - 1),
        (x + 1 < width).then(|| i + 1),
        (y > 0).then(|| i - width),
        (y + 1 < height).then(|| i + width),
    ]
    .into_iter()
    .flatten()
}

/// Mask plus a flag for the case where nothing but the contour itself is unity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilledMask {
    pub mask: BinaryMask,
    pub degenerate_contour: bool,
}

fn clamp_pixel(p: (i64, i64), width: usize, height: usize) -> (i64, i64) {
    (p.0.clamp(0, width as i64 - 1), p.1.clamp(0, height as i64 - 1))
}

/// Pixels of an 8-connected digital line between two pixels, endpoints included.
pub fn line_pixels(from: (i64, i64), to: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push((x, y));
        if (x, y) == to {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Contour pixel set for a trace.
pub fn rasterize_contour(trace: &BoundaryTrace, width: usize, height: usize) -> Result<BinaryMask> {
    rasterize_points(
        trace.change_points.iter().map(|p| p.pixel()),
        trace.termination == Termination::ClosedAtSeed,
        width,
        height,
    )
}

/// Marks every pixel in `pixels` and joins consecutive ones with line segments;
/// `closed` also joins the last back to the first.
pub fn rasterize_points(
    pixels: impl IntoIterator<Item = (i64, i64)>,
    closed: bool,
    width: usize,
    height: usize,
) -> Result<BinaryMask> {
    let pixels: Vec<(i64, i64)> = pixels.into_iter().map(|p| clamp_pixel(p, width, height)).collect();
    if pixels.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut contour = BinaryMask::new(width, height);
    let mut segment = |a: (i64, i64), b: (i64, i64)| {
        for (x, y) in line_pixels(a, b) {
            contour.set(x as usize, y as usize, true);
        }
    };
    for pair in pixels.windows(2) {
        segment(pair[0], pair[1]);
    }
    if closed || pixels.len() == 1 {
        segment(pixels[pixels.len() - 1], pixels[0]);
    }
    Ok(contour)
}

/// Fills a contour into an ROI mask.
///
/// For an open contour (`HitBorder`) both ends are first extended straight to
/// their nearest image edge and joined the shorter way round the image border.
pub fn fill_mask(contour: &BinaryMask, termination: Termination, ends: Option<((i64, i64), (i64, i64))>) -> FilledMask {
    let (w, h) = contour.dims();
    let mut closed = contour.clone();
    if termination == Termination::HitBorder {
        if let Some((a, b)) = ends {
            close_along_border(&mut closed, a, b);
        }
    }

    let mut exterior = vec![false; w * h];
    let mut queue = VecDeque::new();
    for (i, seen) in exterior.iter_mut().enumerate() {
        let (x, y) = (i % w, i / w);
        let on_border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
        if on_border && !closed.bits[i] {
            *seen = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for j in neighbors4(i, w, h) {
            if !closed.bits[j] && !exterior[j] {
                exterior[j] = true;
                queue.push_back(j);
            }
        }
    }

    let mask = BinaryMask::from_bits(w, h, exterior.iter().map(|&e| !e).collect());
    let interior = mask
        .bits
        .iter()
        .zip(&closed.bits)
        .filter(|(&m, &c)| m && !c)
        .count();
    FilledMask {
        mask,
        degenerate_contour: interior == 0,
    }
}

fn nearest_edge_point(p: (i64, i64), w: i64, h: i64) -> (i64, i64) {
    let candidates = [(0, p.1), (w - 1, p.1), (p.0, 0), (p.0, h - 1)];
    *candidates
        .iter()
        .min_by_key(|c| (c.0 - p.0).abs() + (c.1 - p.1).abs())
        .expect("four candidates")
}

/// Perimeter position (clockwise from the top-left corner) of an edge pixel.
fn perimeter_index(p: (i64, i64), w: i64, h: i64) -> i64 {
    let (x, y) = p;
    if y == 0 {
        x
    } else if x == w - 1 {
        (w - 1) + y
    } else if y == h - 1 {
        (w - 1) + (h - 1) + (w - 1 - x)
    } else {
        2 * (w - 1) + (h - 1) + (h - 1 - y)
    }
}

fn perimeter_point(i: i64, w: i64, h: i64) -> (i64, i64) {
    let per = 2 * (w - 1) + 2 * (h - 1);
    let i = i.rem_euclid(per);
    if i < w - 1 {
        (i, 0)
    } else if i < (w - 1) + (h - 1) {
        (w - 1, i - (w - 1))
    } else if i < 2 * (w - 1) + (h - 1) {
        (w - 1 - (i - (w - 1) - (h - 1)), h - 1)
    } else {
        (0, h - 1 - (i - 2 * (w - 1) - (h - 1)))
    }
}

fn close_along_border(contour: &mut BinaryMask, start: (i64, i64), end: (i64, i64)) {
    let (w, h) = (contour.width as i64, contour.height as i64);
    let mut mark = |pts: Vec<(i64, i64)>| {
        for (x, y) in pts {
            contour.set(x as usize, y as usize, true);
        }
    };
    let a = nearest_edge_point(start, w, h);
    let b = nearest_edge_point(end, w, h);
    mark(line_pixels(start, a));
    mark(line_pixels(end, b));

    // walk the shorter way round the perimeter between the two edge points
    let per = 2 * (w - 1) + 2 * (h - 1);
    let ia = perimeter_index(a, w, h);
    let ib = perimeter_index(b, w, h);
    let forward = (ib - ia).rem_euclid(per);
    let (from, len) = if forward <= per - forward { (ia, forward) } else { (ib, per - forward) };
    mark((0..=len).map(|k| perimeter_point(from + k, w, h)).collect());
}

/// Rasterize and fill in one go.
pub fn trace_to_mask(trace: &BoundaryTrace, width: usize, height: usize) -> Result<FilledMask> {
    let contour = rasterize_contour(trace, width, height)?;
    let ends = match (trace.change_points.first(), trace.change_points.last()) {
        (Some(a), Some(b)) => {
            let (a, b) = (clamp_pixel(a.pixel(), width, height), clamp_pixel(b.pixel(), width, height));
            Some((a, b))
        }
        _ => None,
    };
    Ok(fill_mask(&contour, trace.termination, ends))
}
