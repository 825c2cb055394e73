//! Acceptance suite. Runs without the libtest harness so each criterion prints
//! exactly one PASS/FAIL line; exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_8, TAU};
use std::time::{Duration, Instant};

use perfusion_roi::cli;
use perfusion_roi::cusum::{CusumConfig, CusumDetector, Fallbacks};
use perfusion_roi::imaging::{otsu_threshold, otsu_threshold_values, OTSU_BINS};
use perfusion_roi::metrics::{best_threshold_baseline, derive_metrics, evaluate, Confusion};
use perfusion_roi::phantom::{generate, GaussianSource, Lesion, PhantomSpec};
use perfusion_roi::pipeline::{segment_image, PipelineConfig, Segmentation};
use perfusion_roi::planner::{advance, heading_step, Heading, PlannerParams, RegionLabel, MIN_STEP_FACTOR};
use perfusion_roi::{GrayImage, Point2D, Termination};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond { Ok(detail) } else { Err(detail) }
}

// ---------------------------------------------------------------- 1. Otsu

/// Straight from the definition: for every split, gather both classes from the
/// pixels themselves and evaluate `w0 w1 (mu0 - mu1)^2` with bin-center values.
fn otsu_oracle(values: &[f64]) -> usize {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / OTSU_BINS as f64;
    let bin = |v: f64| (((v - lo) / width) as usize).min(OTSU_BINS - 1);
    let center = |k: usize| lo + (k as f64 + 0.5) * width;
    let n = values.len() as f64;
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 0..OTSU_BINS - 1 {
        let (below, above): (Vec<f64>, Vec<f64>) =
            values.iter().map(|&v| center(bin(v))).partition(|&c| c <= center(k));
        if below.is_empty() || above.is_empty() {
            continue;
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let (w0, w1) = (below.len() as f64 / n, above.len() as f64 / n);
        let var = w0 * w1 * (mean(&below) - mean(&above)).powi(2);
        // relative slack absorbs summation-order rounding between the two implementations
        if var > best.0 * (1.0 + 1e-12) {
            best = (var, k);
        }
    }
    best.1
}

fn random_image(rng: &mut GaussianSource, i: usize) -> GrayImage {
    let (w, h) = (32, 32);
    let data: Vec<f64> = match i % 4 {
        // uniform noise on a random range
        0 => {
            let span = 1.0 + 4000.0 * rng.uniform();
            (0..w * h).map(|_| (span * rng.uniform()).round()).collect()
        }
        // two Gaussian blobs
        1 => {
            let (a, b) = (200.0 * rng.uniform(), 300.0 + 700.0 * rng.uniform());
            let s = 5.0 + 60.0 * rng.uniform();
            (0..w * h)
                .map(|k| {
                    let m = if (k % w) < 10 + (k / w) / 2 { a } else { b };
                    (m + s * rng.standard_normal()).round().max(0.0)
                })
                .collect()
        }
        // three levels
        2 => (0..w * h)
            .map(|_| {
                let lvl = [50.0, 400.0, 900.0][(rng.uniform() * 3.0) as usize];
                (lvl + 30.0 * rng.standard_normal()).round().max(0.0)
            })
            .collect(),
        // real-valued, skewed
        _ => (0..w * h).map(|_| (-rng.uniform().max(1e-12).ln()) * 137.0).collect(),
    };
    GrayImage::new(w, h, data).unwrap()
}

fn criterion_otsu() -> Outcome {
    let mut rng = GaussianSource::new(0x07_50);
    let mut mismatches = 0;
    let mut elapsed = Duration::ZERO;
    for i in 0..200 {
        let img = random_image(&mut rng, i);
        let (lo, hi) = img.min_max();
        let width = (hi - lo) / OTSU_BINS as f64;
        let start = Instant::now();
        let t = otsu_threshold(&img).map_err(|e| e.to_string())?;
        elapsed += start.elapsed();
        let k = ((t - lo) / width - 0.5).round() as usize;
        if k != otsu_oracle(img.data()) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!("200 images, {mismatches} bin mismatches, {:.1} ms in otsu_threshold", elapsed.as_secs_f64() * 1e3),
    )
}

// ---------------------------------------------------------------- 2. geometry

fn octagon(start: Point2D, heading: f64, v: f64, label: RegionLabel, params: &PlannerParams) -> Vec<Point2D> {
    let mut pts = vec![start];
    let mut theta = Heading::new(heading);
    let mut p = start;
    for _ in 0..8 {
        p = advance(p, theta.radians(), v);
        pts.push(p);
        theta = theta.turned(heading_step(label, false, params));
    }
    pts
}

fn criterion_geometry() -> Outcome {
    let img = GrayImage::new(3, 3, vec![0.0; 9]).unwrap();
    let params = PlannerParams::for_image(&img);
    let v = params.step_length;

    let mut rng = GaussianSource::new(8);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let start = Point2D::new(200.0 * rng.uniform(), 200.0 * rng.uniform());
        let label = if i % 2 == 0 { RegionLabel::Omega1 } else { RegionLabel::Omega2 };
        let pts = octagon(start, TAU * rng.uniform(), v, label, &params);
        worst = worst.max(pts[8].distance(start));
    }

    // Headings pi/8 + k pi/4 put two octagon vertices on each axis; the
    // octagon is then V (2 cos(pi/8) + 2 cos(3 pi/8)) = 2.613 V wide, which
    // reaches one pixel at V = 0.3827.
    let v_min = MIN_STEP_FACTOR;
    let mut stuck = 0;
    let mut tried = 0;
    for k in 0..8 {
        let heading = FRAC_PI_8 + k as f64 * std::f64::consts::FRAC_PI_4;
        for label in [RegionLabel::Omega1, RegionLabel::Omega2] {
            for i in 0..20 {
                for j in 0..20 {
                    let start = Point2D::new(10.0 - 0.5 + (i as f64 + 0.5) / 20.0, 10.0 - 0.5 + (j as f64 + 0.5) / 20.0);
                    let home = start.pixel();
                    tried += 1;
                    if octagon(start, heading, v_min, label, &params).iter().all(|p| p.pixel() == home) {
                        stuck += 1;
                    }
                }
            }
        }
    }
    check(
        worst <= 1e-6 * v && stuck == 0,
        format!("closure error {worst:.1e} (limit {:.1e}); V = {v_min}: {stuck}/{tried} octagons stayed in their pixel", 1e-6 * v),
    )
}

// ---------------------------------------------------------------- 3. CUSUM delay

const PRE: usize = 200;
const POST: usize = 60;
const BRIGHT: f64 = 600.0;
const DARK: f64 = 540.0;

fn step_signal(rng: &mut GaussianSource, sigma: f64) -> Vec<f64> {
    (0..PRE + POST)
        .map(|i| if i < PRE { BRIGHT } else { DARK } + sigma * rng.standard_normal())
        .collect()
}

/// Alarm indices of a detector fed `signal`, starting in the bright region.
fn run_detector(signal: &[f64]) -> Vec<usize> {
    let t = otsu_threshold_values(signal).unwrap();
    let fallbacks = Fallbacks { otsu_threshold: t, otsu_means: (DARK, BRIGHT), dynamic_range: BRIGHT - DARK };
    let mut det = CusumDetector::new(RegionLabel::Omega1, fallbacks, &CusumConfig::default()).unwrap();
    let mut alarms = Vec::new();
    for (i, &x) in signal.iter().enumerate() {
        if det.update(x).unwrap().alarm {
            alarms.push(i);
        }
    }
    alarms
}

/// Noise-free delay worked out by hand: the bright window is full of BRIGHT,
/// each dark sample adds `mu1 - DARK` and then joins the window, pulling `mu1`
/// down by `(BRIGHT - DARK) / q` per sample. The alarm is the first sample
/// that pushes the sum past `h`.
fn zero_noise_delay(h: f64, q: usize) -> usize {
    let gap = BRIGHT - DARK;
    let mut sum = 0.0;
    for i in 0.. {
        let mu1 = BRIGHT - gap * i.min(q) as f64 / q as f64;
        sum += mu1 - DARK;
        if sum > h {
            return i;
        }
    }
    unreachable!()
}

fn criterion_cusum_delay() -> Outcome {
    let sigma = (BRIGHT - DARK) / 6.0;
    let mut rng = GaussianSource::new(0xC05);
    let (mut early, mut fast) = (0, 0);
    let trials = 1000;
    for _ in 0..trials {
        let alarms = run_detector(&step_signal(&mut rng, sigma));
        if alarms.iter().any(|&a| a < PRE) {
            early += 1;
        }
        if alarms.iter().find(|&&a| a >= PRE).is_some_and(|&a| a - PRE <= 15) {
            fast += 1;
        }
    }

    let clean = step_signal(&mut rng, 0.0);
    let h = otsu_threshold_values(&clean).unwrap();
    let got = run_detector(&clean).first().map(|&a| a - PRE);
    let want = zero_noise_delay(h, CusumConfig::default().window);
    let bound = (h / (BRIGHT - DARK)).ceil() as usize + 1;
    let rate = fast as f64 / trials as f64;
    check(
        early == 0 && rate >= 0.95 && got == Some(want) && want <= bound,
        format!(
            "{early} early alarms, {:.1}% within 15 samples; zero-noise delay {got:?} vs unrolled {want} (bound {bound})",
            100.0 * rate
        ),
    )
}

// ---------------------------------------------------------------- 4. phantom accuracy

fn segment_phantom(spec: &PhantomSpec) -> Result<(Segmentation, f64, GrayImage, perfusion_roi::BinaryMask), String> {
    let (stack, truth) = generate(spec).map_err(|e| e.to_string())?;
    let img = stack.working_image(0, None).map_err(|e| e.to_string())?.clone();
    let seg = segment_image(&img, &PipelineConfig::for_image(&img)).map_err(|e| e.to_string())?;
    let dice = evaluate(&seg.mask, &truth).map_err(|e| e.to_string())?.dice;
    Ok((seg, dice, img, truth))
}

/// 90th percentile of change-point distances to the outer ellipse (dense polygon).
fn p90_distance(spec: &PhantomSpec, points: &[Point2D]) -> f64 {
    let e = spec.outer;
    let rim: Vec<Point2D> = (0..4096)
        .map(|k| {
            let a = TAU * k as f64 / 4096.0;
            Point2D::new(e.center.x + e.semi_x * a.cos(), e.center.y + e.semi_y * a.sin())
        })
        .collect();
    let mut d: Vec<f64> = points
        .iter()
        .map(|p| rim.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min))
        .collect();
    d.sort_by(f64::total_cmp);
    d[(0.9 * (d.len() - 1) as f64).round() as usize]
}

fn criterion_phantom_accuracy() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (sigma, min_dice) in [(20.0, 0.97), (50.0, 0.95)] {
        let spec = PhantomSpec { noise_sigma: sigma, ..Default::default() };
        let (seg, dice, _, _) = segment_phantom(&spec)?;
        let p90 = p90_distance(&spec, &seg.trace.change_points);
        ok &= dice >= min_dice && p90 <= 2.0 && seg.trace.termination == Termination::ClosedAtSeed;
        parts.push(format!("sigma {sigma}: dice {dice:.4} (>= {min_dice}), p90 {p90:.2} px"));
    }
    check(ok, parts.join("; "))
}

// ---------------------------------------------------------------- 5. baseline

/// Ring overlapping the interior, plus dark lesions inside the brain that no
/// single global threshold can keep while dropping the background.
fn overlap_spec(seed: u64) -> PhantomSpec {
    PhantomSpec {
        ring_mean: 500.0,
        interior_mean: 450.0,
        noise_sigma: 40.0,
        rng_seed: seed,
        lesions: vec![
            Lesion { center: Point2D::new(50.0, 55.0), radius: 9.0, delta: -380.0 },
            Lesion { center: Point2D::new(78.0, 75.0), radius: 7.0, delta: -380.0 },
        ],
        ..Default::default()
    }
}

fn criterion_baseline() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for seed in 1..=3 {
        let spec = overlap_spec(seed);
        let (_, dice, img, truth) = segment_phantom(&spec)?;
        let base = best_threshold_baseline(&img, &truth).map_err(|e| e.to_string())?.metrics.dice;
        ok &= dice > base;
        parts.push(format!("{dice:.4} vs {base:.4}"));
    }
    check(ok, format!("cusum vs best threshold: {}", parts.join(", ")))
}

// ---------------------------------------------------------------- 6. runtime

fn criterion_runtime() -> Outcome {
    let (stack, _) = generate(&PhantomSpec::default()).map_err(|e| e.to_string())?;
    let img = stack.working_image(0, None).map_err(|e| e.to_string())?;
    let config = PipelineConfig::for_image(img);
    let start = Instant::now();
    segment_image(img, &config).map_err(|e| e.to_string())?;
    let t = start.elapsed().as_secs_f64();
    check(t < 1.0, format!("128x128 segmentation in {:.1} ms", t * 1e3))
}

// ---------------------------------------------------------------- 7. metrics

fn criterion_metrics() -> Outcome {
    let mut rng = GaussianSource::new(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let mut draw = || (rng.uniform() * 10_000.0) as u64;
        let (tp, fp, tn, fn_) = (draw() + 1, draw(), draw() + 1, draw());
        let m = derive_metrics(Confusion { tp, fp, tn, fn_ }).map_err(|e| e.to_string())?;
        let (tp, fp, tn, fn_) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
        let want = [
            2.0 * tp / (2.0 * tp + fp + fn_),
            tp / (tp + fn_),
            tn / (tn + fp),
            (tp + tn) / (tp + fp + tn + fn_),
        ];
        for (got, want) in [m.dice, m.tpf, m.tnf, m.acc].into_iter().zip(want) {
            worst = worst.max((got - want).abs());
        }
    }
    check(worst <= 1e-12, format!("50 tuples, max abs error {worst:.1e}"))
}

// ---------------------------------------------------------------- 8. determinism

fn criterion_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ph = tmp.path().join("ph");
    let arg = |p: &std::path::Path| p.to_str().unwrap().to_owned();
    let run = |args: Vec<String>| cli::run(std::iter::once("perfusion-roi".to_owned()).chain(args));
    if run(vec!["phantom".into(), "-o".into(), arg(&ph), "--timepoints".into(), "5".into()]) != 0 {
        return Err("phantom command failed".into());
    }
    let mut runs = Vec::new();
    for i in 0..2 {
        let mask = tmp.path().join(format!("mask{i}.pgm"));
        let report = tmp.path().join(format!("report{i}.json"));
        let code = run(vec![
            "segment".into(),
            arg(&ph),
            "-o".into(),
            arg(&mask),
            "--report".into(),
            arg(&report),
        ]);
        if code != 0 {
            return Err(format!("segment exited {code}"));
        }
        let mut r: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let obj = r.as_object_mut().unwrap();
        obj.remove("wall_time_ms");
        obj.remove("mask");
        runs.push((std::fs::read(&mask).map_err(|e| e.to_string())?, serde_json::to_vec(&r).unwrap()));
    }
    check(runs[0] == runs[1], format!("mask {} bytes, reports identical: {}", runs[0].0.len(), runs[0].1 == runs[1].1))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 otsu oracle equivalence", criterion_otsu),
        ("2 octagon geometry", criterion_geometry),
        ("3 cusum detection delay", criterion_cusum_delay),
        ("4 phantom accuracy", criterion_phantom_accuracy),
        ("5 beats best global threshold", criterion_baseline),
        ("6 runtime", criterion_runtime),
        ("7 metric formulas", criterion_metrics),
        ("8 determinism", criterion_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
