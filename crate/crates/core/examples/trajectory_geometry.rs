//! The zig-zag walk on a noiseless disk: turning rules, octagon closure, and
//! where the crossings land. Writes the visited path as CSV to stdout.
//!
//!     cargo run --example trajectory_geometry > path.csv

use std::f64::consts::FRAC_PI_8;

use perfusion_roi::planner::{advance, heading_step, Heading, PlannerParams, RegionLabel};
use perfusion_roi::seed::SeedConfig;
use perfusion_roi::segmenter::{segment_boundary, TrackerOptions};
use perfusion_roi::{GrayImage, Point2D};

fn main() -> Result<(), perfusion_roi::Error> {
    let img = GrayImage::from_fn(96, 96, |x, y| {
        if (x as f64 - 47.5).hypot(y as f64 - 47.5) <= 30.0 { 200.0 } else { 10.0 }
    })?;
    let params = PlannerParams::for_image(&img);

    // eight same-sign turns come back to the start
    let start = Point2D::new(10.0, 10.0);
    let (mut p, mut th) = (start, Heading::new(FRAC_PI_8));
    for _ in 0..8 {
        p = advance(p, th.radians(), params.step_length);
        th = th.turned(heading_step(RegionLabel::Omega1, false, &params));
    }
    eprintln!("octagon closure error {:.2e}", p.distance(start));

    let trace = segment_boundary(&img, &SeedConfig::default(), None, &params, &TrackerOptions::default())?;
    let radii: Vec<f64> = trace.change_points.iter().map(|c| (c.x - 47.5).hypot(c.y - 47.5)).collect();
    let worst = radii.iter().map(|r| (r - 30.0).abs()).fold(0.0, f64::max);
    eprintln!(
        "{:?}: {} steps, {} crossings, farthest {:.2} px from the rim",
        trace.termination,
        trace.visited.len() - 1,
        trace.change_points.len(),
        worst
    );

    println!("x,y");
    for v in &trace.visited {
        println!("{},{}", v.x, v.y);
    }
    Ok(())
}
