//! Otsu threshold and the diagonal seed scan from each corner.
//!
//!     cargo run --example otsu_seed

use perfusion_roi::imaging::{otsu_class_means, otsu_threshold};
use perfusion_roi::phantom::{generate, PhantomSpec};
use perfusion_roi::seed::{find_initial_point, Corner, SeedConfig};

fn main() -> Result<(), perfusion_roi::Error> {
    let (stack, _) = generate(&PhantomSpec::default())?;
    let img = stack.working_image(0, None)?;
    let t = otsu_threshold(img)?;
    let (below, above) = otsu_class_means(img, t)?;
    println!("otsu threshold {t:.2}, class means {below:.1} / {above:.1}");

    for corner in [Corner::BottomLeft, Corner::BottomRight, Corner::TopLeft, Corner::TopRight] {
        let p = find_initial_point(img, t, &SeedConfig { corner })?;
        println!(
            "{corner:?}: seed ({}, {}), initial heading {:.3} rad",
            p.x,
            p.y,
            corner.initial_heading()
        );
    }
    Ok(())
}
