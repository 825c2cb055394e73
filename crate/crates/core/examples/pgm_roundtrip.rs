//! Reading and writing PGM images, masks and stack directories.
//!
//!     cargo run --example pgm_roundtrip -- [dir]

use perfusion_roi::imaging::pgm::{load_mask, save_image_ascii};
use perfusion_roi::imaging::{load_image, save_image, save_mask};
use perfusion_roi::phantom::{generate, PhantomSpec};
use perfusion_roi::{BinaryMask, GrayImage, PerfusionStack};

fn main() -> Result<(), perfusion_roi::Error> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("pgm_roundtrip").display().to_string());
    std::fs::create_dir_all(&dir).map_err(|e| perfusion_roi::Error::Io { path: dir.clone().into(), source: e })?;

    // 16-bit binary with anisotropic spacing (stored in a JSON sidecar)
    let img = GrayImage::with_spacing(4, 3, (0..12).map(|v| v as f64 * 5000.0).collect(), 0.9, 1.2)?;
    let path = format!("{dir}/ramp.pgm");
    save_image(&img, &path)?;
    let back = load_image(&path)?;
    println!("ramp: {:?} spacing {:?}, identical: {}", back.dims(), back.spacing(), back == img);

    save_image_ascii(&img, format!("{dir}/ramp_ascii.pgm"))?;
    println!("ascii: identical: {}", load_image(format!("{dir}/ramp_ascii.pgm"))?.data() == img.data());

    let mask = BinaryMask::from_fn(5, 5, |x, y| x + y < 5);
    save_mask(&mask, format!("{dir}/mask.pgm"))?;
    println!("mask: identical: {}", load_mask(format!("{dir}/mask.pgm"))? == mask);

    let (stack, _) = generate(&PhantomSpec { num_timepoints: 6, ..Default::default() })?;
    stack.save(format!("{dir}/stack"))?;
    let loaded = PerfusionStack::load(format!("{dir}/stack"))?;
    println!("stack: {:?}, identical: {}", loaded.metadata(), loaded == stack);
    Ok(())
}
