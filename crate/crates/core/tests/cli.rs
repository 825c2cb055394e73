use std::fs;
use std::path::Path;

use perfusion_roi::cli::{run, EXIT_OK, EXIT_SEGMENTATION, EXIT_USAGE};
use perfusion_roi::imaging::{save_image, save_mask};
use perfusion_roi::phantom::{generate, PhantomSpec};
use perfusion_roi::{BinaryMask, GrayImage, PerfusionStack};
use serde_json::Value;

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("perfusion-roi").chain(args.iter().copied()))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("wall_time_ms");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn write_phantom(dir: &Path) {
    let code = cli(&["phantom", "-o", dir.to_str().unwrap(), "--timepoints", "5"]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn default_phantom_segments_and_closes() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = tmp.path().join("ph");
    write_phantom(&ph);
    let mask = tmp.path().join("out/mask.pgm");
    let code = cli(&["segment", ph.to_str().unwrap(), "-o", mask.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(mask.exists());
    let report = read_json(&mask.with_extension("json"));
    assert_eq!(report["termination"], "ClosedAtSeed");
    assert_eq!(report["status"], "ok");
    assert!(report["num_change_points"].as_u64().unwrap() > 0);
    assert!(report["seed"]["x"].is_number());
    assert!(report["wall_time_ms"].is_number());
    assert_eq!(report["params"]["planner"]["step_length"], 0.39);
    assert_eq!(report["params"]["cusum"]["window"], 45);
}

#[test]
fn missing_input_exits_one_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m.pgm");
    let code = cli(&["segment", tmp.path().join("nope").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(!out.exists());
    assert_eq!(read_json(&out.with_extension("json"))["error"]["name"], "IoError");
}

#[test]
fn uniform_image_exits_two_naming_no_contrast() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("flat.pgm");
    save_image(&GrayImage::new(16, 16, vec![7.0; 256]).unwrap(), &input).unwrap();
    let out = tmp.path().join("m.pgm");
    let code = cli(&["segment", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_SEGMENTATION);
    assert!(!out.exists(), "no mask on failure");
    assert_eq!(read_json(&out.with_extension("json"))["error"]["name"], "NoContrast");
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(cli(&["segment"]), EXIT_USAGE);
    assert_eq!(cli(&["segment", "x", "-o", "y", "--seed", "3"]), EXIT_USAGE);
    assert_eq!(cli(&["segment", "x", "-o", "y", "--reset-mode", "sometimes"]), EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]), EXIT_USAGE);
}

#[test]
fn step_factor_below_minimum_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = tmp.path().join("ph");
    write_phantom(&ph);
    let out = tmp.path().join("m.pgm");
    let code = cli(&["segment", ph.to_str().unwrap(), "-o", out.to_str().unwrap(), "--step-factor", "0.2"]);
    assert_eq!(code, EXIT_USAGE);
    assert_eq!(read_json(&out.with_extension("json"))["error"]["name"], "InvalidParams");
}

#[test]
fn seed_override_is_used() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = tmp.path().join("ph");
    write_phantom(&ph);
    let out = tmp.path().join("m.pgm");
    let code = cli(&["segment", ph.to_str().unwrap(), "-o", out.to_str().unwrap(), "--seed", "63.5,6"]);
    assert_eq!(code, EXIT_OK);
    let report = read_json(&out.with_extension("json"));
    assert_eq!(report["seed"]["x"], 63.5);
    assert_eq!(report["seed"]["y"], 6.0);
}

#[test]
fn eval_identical_masks_scores_one() {
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join("m.pgm");
    save_mask(&BinaryMask::from_fn(8, 8, |x, y| x > 2 && y < 5), &m).unwrap();
    let report = tmp.path().join("r.json");
    let code = cli(&["eval", "--mask", m.to_str().unwrap(), "--reference", m.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(read_json(&report)["cusum"]["dice"], 1.0);
}

#[test]
fn eval_mismatched_sizes_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.pgm"), tmp.path().join("b.pgm"));
    save_mask(&BinaryMask::new(8, 8), &a).unwrap();
    save_mask(&BinaryMask::new(9, 8), &b).unwrap();
    let report = tmp.path().join("r.json");
    let code = cli(&["eval", "--mask", a.to_str().unwrap(), "--reference", b.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert_eq!(read_json(&report)["error"]["name"], "DimensionMismatch");
}

#[test]
fn eval_with_baseline_reports_both_blocks() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = tmp.path().join("ph");
    write_phantom(&ph);
    let mask = tmp.path().join("m.pgm");
    assert_eq!(cli(&["segment", ph.to_str().unwrap(), "-o", mask.to_str().unwrap()]), EXIT_OK);
    let report = tmp.path().join("r.json");
    let code = cli(&[
        "eval",
        "--mask",
        mask.to_str().unwrap(),
        "--reference",
        ph.join("ground_truth.pgm").to_str().unwrap(),
        "--baseline-image",
        ph.join("s0_t3.pgm").to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let r = read_json(&report);
    assert!(r["cusum"]["dice"].as_f64().unwrap() > 0.97);
    assert!(r["best_threshold"]["metrics"]["dice"].is_number());
    assert!(r["best_threshold"]["threshold"].is_number());
}

#[test]
fn phantom_writes_stack_truth_and_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = tmp.path().join("ph");
    write_phantom(&ph);
    for f in ["metadata.json", "ground_truth.pgm", "phantom.json", "s0_t0.pgm", "s0_t4.pgm"] {
        assert!(ph.join(f).exists(), "{f}");
    }
    let stack = PerfusionStack::load(&ph).unwrap();
    assert_eq!((stack.num_slices(), stack.num_timepoints()), (1, 5));
    // same spec through the API gives the same pixels
    let (again, _) = generate(&PhantomSpec { num_timepoints: 5, ..Default::default() }).unwrap();
    assert_eq!(stack.image(0, 3).unwrap().data(), again.image(0, 3).unwrap().data());
}

#[test]
fn phantom_from_spec_file() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = PhantomSpec { width: 64, height: 64, num_timepoints: 2, ..Default::default() };
    let spec = PhantomSpec {
        outer: perfusion_roi::phantom::Ellipse { center: perfusion_roi::Point2D::new(31.5, 31.5), semi_x: 25.0, semi_y: 28.0 },
        inner: perfusion_roi::phantom::Ellipse { center: perfusion_roi::Point2D::new(31.5, 31.5), semi_x: 20.0, semi_y: 23.0 },
        lesions: vec![],
        ..spec
    };
    let spec_path = tmp.path().join("spec.json");
    fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = tmp.path().join("ph");
    assert_eq!(cli(&["phantom", "-o", out.to_str().unwrap(), "--spec", spec_path.to_str().unwrap()]), EXIT_OK);
    assert_eq!(PerfusionStack::load(&out).unwrap().image(0, 1).unwrap().dims(), (64, 64));

    let bad = PhantomSpec { noise_sigma: -1.0, ..spec };
    fs::write(&spec_path, serde_json::to_string(&bad).unwrap()).unwrap();
    assert_eq!(cli(&["phantom", "-o", out.to_str().unwrap(), "--spec", spec_path.to_str().unwrap()]), EXIT_USAGE);
}

#[test]
fn trace_dump_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = tmp.path().join("ph");
    write_phantom(&ph);
    let csv = tmp.path().join("t.csv");
    assert_eq!(cli(&["trace-dump", ph.to_str().unwrap(), "-o", csv.to_str().unwrap()]), EXIT_OK);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,x,y,intensity,S,h,label,alarm"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() > 100);
    assert!(rows.iter().any(|r| r.ends_with(",1")));
    assert!(rows.iter().all(|r| r.split(',').count() == 8));
}

#[test]
fn trace_dump_of_diverged_run_exits_two_with_partial_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = tmp.path().join("ph");
    write_phantom(&ph);
    let csv = tmp.path().join("t.csv");
    let code = cli(&["trace-dump", ph.to_str().unwrap(), "-o", csv.to_str().unwrap(), "--max-steps", "50"]);
    assert_eq!(code, EXIT_SEGMENTATION);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 51);
}

fn multi_slice_stack(dir: &Path) {
    let slices = (0..4u64)
        .map(|s| {
            let spec = PhantomSpec { rng_seed: 100 + s, num_timepoints: 4, ..Default::default() };
            let (stack, _) = generate(&spec).unwrap();
            (0..4).map(|t| stack.image(0, t).unwrap().clone()).collect()
        })
        .collect();
    PerfusionStack::new(slices).unwrap().save(dir).unwrap();
}

#[test]
fn all_slices_is_independent_of_job_count() {
    let tmp = tempfile::tempdir().unwrap();
    let stack = tmp.path().join("stack");
    multi_slice_stack(&stack);
    let mut reports = Vec::new();
    let mut masks = Vec::new();
    for jobs in ["1", "3"] {
        let out = tmp.path().join(format!("out{jobs}"));
        let code = cli(&["segment", stack.to_str().unwrap(), "-o", out.to_str().unwrap(), "--all-slices", "--jobs", jobs]);
        assert_eq!(code, EXIT_OK);
        let mut r = read_json(&out.join("report.json"));
        strip_timing(&mut r);
        // paths differ by construction
        for s in r["slices"].as_array_mut().unwrap() {
            s.as_object_mut().unwrap().remove("mask");
        }
        reports.push(r);
        masks.push((0..4).map(|s| fs::read(out.join(format!("s{s}_mask.pgm"))).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(masks[0], masks[1]);
    assert_eq!(reports[0]["slices"].as_array().unwrap().len(), 4);
}

#[test]
fn repeated_runs_give_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = tmp.path().join("ph");
    write_phantom(&ph);
    let mut outs = Vec::new();
    for i in 0..2 {
        let mask = tmp.path().join("m.pgm");
        let report = tmp.path().join(format!("r{i}.json"));
        assert_eq!(
            cli(&["segment", ph.to_str().unwrap(), "-o", mask.to_str().unwrap(), "--report", report.to_str().unwrap()]),
            EXIT_OK
        );
        let mut r = read_json(&report);
        strip_timing(&mut r);
        outs.push((fs::read(&mask).unwrap(), r));
    }
    assert_eq!(outs[0], outs[1]);
}
