//! The change-point detector on its own: bright, dark, then bright again.
//!
//!     cargo run --example cusum_stream

use perfusion_roi::cusum::{CusumConfig, CusumDetector, Fallbacks, ResetMode};
use perfusion_roi::imaging::otsu_threshold_values;
use perfusion_roi::phantom::GaussianSource;
use perfusion_roi::planner::RegionLabel;

fn main() -> Result<(), perfusion_roi::Error> {
    let mut noise = GaussianSource::new(1);
    let signal: Vec<f64> = (0..180)
        .map(|i| if (60..120).contains(&i) { 540.0 } else { 600.0 } + 10.0 * noise.standard_normal())
        .collect();

    let fallbacks = Fallbacks {
        otsu_threshold: otsu_threshold_values(&signal)?,
        otsu_means: (540.0, 600.0),
        dynamic_range: 60.0,
    };
    for mode in [ResetMode::HalfCurrent, ResetMode::Zero] {
        let config = CusumConfig { reset_mode: mode, ..Default::default() };
        let mut det = CusumDetector::new(RegionLabel::Omega1, fallbacks, &config)?;
        for (i, &x) in signal.iter().enumerate() {
            let u = det.update(x)?;
            if u.alarm {
                println!("{mode:?}: alarm at sample {i} (changes at 60, 120), S restarted at {:.1}, h = {:.1}", u.sum, u.threshold);
            }
        }
    }
    Ok(())
}
