//! CUSUM mask against the best global threshold, on a phantom with dark
//! lesions inside the brain that thresholding cannot keep.
//!
//!     cargo run --example evaluate_baseline

use perfusion_roi::metrics::{best_threshold_baseline, evaluate};
use perfusion_roi::phantom::{generate, Lesion, PhantomSpec};
use perfusion_roi::pipeline::{segment_image, PipelineConfig};
use perfusion_roi::Point2D;

fn main() -> Result<(), perfusion_roi::Error> {
    let spec = PhantomSpec {
        ring_mean: 500.0,
        interior_mean: 450.0,
        noise_sigma: 40.0,
        lesions: vec![
            Lesion { center: Point2D::new(50.0, 55.0), radius: 9.0, delta: -380.0 },
            Lesion { center: Point2D::new(78.0, 75.0), radius: 7.0, delta: -380.0 },
        ],
        ..Default::default()
    };
    let (stack, truth) = generate(&spec)?;
    let img = stack.working_image(0, None)?;

    let seg = segment_image(img, &PipelineConfig::for_image(img))?;
    let cusum = evaluate(&seg.mask, &truth)?;
    let base = best_threshold_baseline(img, &truth)?;

    println!("cusum          dice {:.4}  tpf {:.4}  tnf {:.4}", cusum.dice, cusum.tpf, cusum.tnf);
    println!(
        "best threshold dice {:.4}  tpf {:.4}  tnf {:.4}  ({:?} {})",
        base.metrics.dice, base.metrics.tpf, base.metrics.tnf, base.polarity, base.threshold
    );
    Ok(())
}
