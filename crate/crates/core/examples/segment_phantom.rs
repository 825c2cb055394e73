//! End-to-end: synthesize a head phantom, segment its working image, score it.
//!
//!     cargo run --example segment_phantom -- [noise_sigma] [out_dir]

use perfusion_roi::imaging::save_mask;
use perfusion_roi::metrics::evaluate;
use perfusion_roi::phantom::{generate, PhantomSpec};
use perfusion_roi::pipeline::{segment_image, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20.0);
    let out = args.next();

    let spec = PhantomSpec { noise_sigma: sigma, ..Default::default() };
    let (stack, truth) = generate(&spec)?;
    let img = stack.working_image(0, None)?;

    let seg = segment_image(img, &PipelineConfig::for_image(img))?;
    let m = evaluate(&seg.mask, &truth)?;
    println!(
        "seed ({}, {}), {:?} after {} steps, {} change points",
        seg.trace.seed.x,
        seg.trace.seed.y,
        seg.trace.termination,
        seg.trace.visited.len() - 1,
        seg.trace.change_points.len()
    );
    println!("dice {:.4}  tpf {:.4}  tnf {:.4}  acc {:.4}", m.dice, m.tpf, m.tnf, m.acc);

    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        stack.save(&dir)?;
        save_mask(&seg.mask, format!("{dir}/mask.pgm"))?;
        save_mask(&truth, format!("{dir}/ground_truth.pgm"))?;
        println!("wrote {dir}");
    }
    Ok(())
}
