//! Minimal PGM (P2 / P5) reader and writer.
//!
//! Samples wider than one byte are big-endian, as netpbm requires. Pixel spacing
//! lives in an optional JSON sidecar next to the image (`<name>.json`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::GrayImage;
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Spacing {
    spacing_x: f64,
    spacing_y: f64,
}

/// Sidecar path for an image: `scan.pgm` -> `scan.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Reads a PGM file, picking up pixel spacing from its sidecar if present.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, data) = decode(&bytes).map_err(|reason| Error::malformed(path, reason))?;

    let sidecar = sidecar_path(path);
    let (sx, sy) = if sidecar.is_file() {
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let s: Spacing = serde_json::from_str(&text)
            .map_err(|e| Error::malformed(&sidecar, e.to_string()))?;
        (s.spacing_x, s.spacing_y)
    } else {
        (1.0, 1.0)
    };
    GrayImage::with_spacing(width, height, data, sx, sy)
        .map_err(|e| Error::malformed(path, e.to_string()))
}

/// Writes an image as binary PGM. Intensities are rounded to the nearest
/// integer and clamped to `[0, 65535]`; `maxval` is 255 when everything fits in
/// a byte and 65535 otherwise.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let samples: Vec<u16> = img
        .data()
        .iter()
        .map(|&v| v.round().clamp(0.0, 65535.0) as u16)
        .collect();
    let maxval = if samples.iter().all(|&v| v <= 255) { 255 } else { 65535 };
    write_p5(path.as_ref(), img.width(), img.height(), maxval, &samples)?;

    let (sx, sy) = img.spacing();
    if (sx, sy) != (1.0, 1.0) {
        let sidecar = sidecar_path(path.as_ref());
        let json = serde_json::to_string_pretty(&Spacing { spacing_x: sx, spacing_y: sy })
            .expect("spacing serializes");
        fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))?;
    }
    Ok(())
}

/// Writes a mask as binary PGM with values {0, 255}.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let samples: Vec<u16> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_p5(path.as_ref(), mask.width(), mask.height(), 255, &samples)
}

/// Reads a mask PGM; any non-zero sample is unity.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, data) = decode(&bytes).map_err(|reason| Error::malformed(path, reason))?;
    Ok(BinaryMask::from_bits(width, height, data.iter().map(|&v| v > 0.0).collect()))
}

/// Writes an ASCII (P2) PGM. Mostly useful for fixtures and hand inspection.
pub fn save_image_ascii(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let samples: Vec<u16> = img
        .data()
        .iter()
        .map(|&v| v.round().clamp(0.0, 65535.0) as u16)
        .collect();
    let maxval = samples.iter().copied().max().unwrap_or(0).max(1);
    let mut out = format!("P2\n{} {}\n{}\n", img.width(), img.height(), maxval);
    for row in samples.chunks(img.width()) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_p5(path: &Path, width: usize, height: usize, maxval: u16, samples: &[u16]) -> Result<()> {
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    if maxval < 256 {
        out.extend(samples.iter().map(|&v| v as u8));
    } else {
        out.extend(samples.iter().flat_map(|v| v.to_be_bytes()));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses PGM bytes into `(width, height, samples)`.
pub fn decode(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), String> {
    let mut header = HeaderReader { bytes, pos: 0 };
    let magic = header.token().ok_or("missing magic number")?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        other => return Err(format!("unsupported magic {:?}", String::from_utf8_lossy(other))),
    };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(format!("bad dimensions {width}x{height}"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| format!("dimensions {width}x{height} overflow"))?;

    let mut data = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates maxval from the raster
        let start = header.pos + 1;
        let sample_bytes = if maxval < 256 { 1 } else { 2 };
        let needed = n * sample_bytes;
        let raster = bytes.get(start..).unwrap_or(&[]);
        if raster.len() < needed {
            return Err(format!("truncated raster: need {needed} bytes, have {}", raster.len()));
        }
        if sample_bytes == 1 {
            data.extend(raster[..needed].iter().map(|&b| b as f64));
        } else {
            data.extend(
                raster[..needed]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64),
            );
        }
    } else {
        for i in 0..n {
            let v = header
                .token()
                .ok_or_else(|| format!("truncated raster: got {i} of {n} samples"))?;
            let v: usize = std::str::from_utf8(v)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("bad sample {:?}", String::from_utf8_lossy(v)))?;
            data.push(v as f64);
        }
    }
    if let Some(v) = data.iter().find(|&&v| v > maxval as f64) {
        return Err(format!("sample {v} exceeds maxval {maxval}"));
    }
    Ok((width, height, data))
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.bytes.get(self.pos) == Some(&b'#') {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize, String> {
        let tok = self.token().ok_or_else(|| format!("missing {what}"))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad {what} {:?}", String::from_utf8_lossy(tok)))
    }
}
