//! Command-line front end: `segment`, `eval`, `phantom`, `trace-dump`.
//!
//! Every command returns a process exit code: 0 on success, 2 when the
//! segmentation itself fails, 1 for I/O and usage problems. Reports are JSON,
//! one object per run, with stable field names.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cusum::{CusumConfig, ResetMode, DEFAULT_H_MIN_FRACTION, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::imaging::{load_image, save_mask, GrayImage, PerfusionStack, Point2D, DEFAULT_TIMEPOINT};
use crate::imaging::pgm::load_mask;
use crate::metrics::{best_threshold_baseline, evaluate};
use crate::phantom::{generate, PhantomSpec, TruthRegion};
use crate::pipeline::{segment_image, PipelineConfig};
use crate::planner::{PlannerParams, DEFAULT_STEP_FACTOR};
use crate::seed::{Corner, SeedConfig};
use crate::segmenter::{segment_boundary, write_trace_csv, TrackerOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SEGMENTATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "perfusion-roi", version, about = "Brain ROI masks for perfusion MR slices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a stack directory or a single PGM image.
    Segment(SegmentArgs),
    /// Score a mask against a reference mask.
    Eval(EvalArgs),
    /// Write a synthetic head phantom stack with its ground truth.
    Phantom(PhantomArgs),
    /// Dump the tracker's per-step diagnostics as CSV.
    TraceDump(TraceDumpArgs),
}

/// Algorithm parameters; defaults are the published ones.
#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    /// Start point `x,y` instead of the diagonal scan.
    #[arg(long, value_parser = parse_point)]
    pub seed: Option<Point2D>,
    /// Corner the seed scan starts from.
    #[arg(long, default_value = "bottom-left")]
    pub corner: Corner,
    /// Step length as a fraction of the smaller pixel side.
    #[arg(long, default_value_t = DEFAULT_STEP_FACTOR)]
    pub step_factor: f64,
    /// CUSUM averaging window (samples per region).
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value = "half-current")]
    pub reset_mode: ResetMode,
    #[arg(long, default_value_t = DEFAULT_H_MIN_FRACTION)]
    pub h_min_fraction: f64,
    /// Turn inside a region, radians.
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub turn_in_region: f64,
    /// Turn at a detected crossing, radians.
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub turn_at_boundary: f64,
    /// Escape turn after a closed loop, radians.
    #[arg(long, default_value_t = FRAC_PI_3)]
    pub loop_shift: f64,
    #[arg(long, default_value_t = 8)]
    pub loop_lag: usize,
    /// Defaults to 50 * (width + height).
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub warmup_steps: usize,
    /// Pixels (Chebyshev) around the seed pixel that count as coming back.
    #[arg(long, default_value_t = 1)]
    pub closure_radius: u32,
    /// Use the plain, non-escalating loop escape.
    #[arg(long)]
    pub no_loop_escalation: bool,
}

impl Default for TuningArgs {
    fn default() -> Self {
        #[derive(Parser)]
        struct Wrap {
            #[command(flatten)]
            t: TuningArgs,
        }
        Wrap::parse_from(["x"]).t
    }
}

impl TuningArgs {
    pub fn pipeline_config(&self, img: &GrayImage) -> PipelineConfig {
        let mut planner = PlannerParams::with_step_factor(img, self.step_factor);
        planner.turn_in_region = self.turn_in_region;
        planner.turn_at_boundary = self.turn_at_boundary;
        planner.loop_shift = self.loop_shift;
        planner.loop_lag = self.loop_lag;
        if let Some(m) = self.max_steps {
            planner.max_steps = m;
        }
        planner.warmup_steps = self.warmup_steps;
        planner.closure_radius = self.closure_radius;
        planner.escalate_loops = !self.no_loop_escalation;
        PipelineConfig {
            seed: SeedConfig { corner: self.corner },
            seed_override: self.seed,
            planner,
            tracker: TrackerOptions {
                cusum: CusumConfig {
                    window: self.window,
                    reset_mode: self.reset_mode,
                    h_min_fraction: self.h_min_fraction,
                },
                record_steps: false,
            },
        }
    }
}

pub fn parse_point(s: &str) -> std::result::Result<Point2D, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Point2D::new(num(x)?, num(y)?))
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    /// Stack directory (with metadata.json) or a single PGM file.
    pub input: PathBuf,
    /// Mask PGM to write; a directory with --all-slices.
    #[arg(short, long)]
    pub output: PathBuf,
    /// JSON report path; defaults to the output with a .json extension
    /// (`report.json` inside the output directory with --all-slices).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TIMEPOINT)]
    pub timepoint: usize,
    #[arg(long, default_value_t = 0)]
    pub slice: usize,
    /// Segment every slice of the stack.
    #[arg(long)]
    pub all_slices: bool,
    /// Slices processed concurrently with --all-slices.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    /// Also score the best global threshold of this image.
    #[arg(long)]
    pub baseline_image: Option<PathBuf>,
    /// Written to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    /// Stack directory to create.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Full spec as JSON; the flags below are ignored when given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    #[arg(long)]
    pub timepoints: Option<usize>,
    #[arg(long)]
    pub truth: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct TraceDumpArgs {
    /// Stack directory or a single PGM file.
    pub input: PathBuf,
    /// CSV path; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TIMEPOINT)]
    pub timepoint: usize,
    #[arg(long, default_value_t = 0)]
    pub slice: usize,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Segment(a) => cmd_segment(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Phantom(a) => cmd_phantom(&a),
        Command::TraceDump(a) => cmd_trace_dump(&a),
    }
}

fn exit_code(err: &Error) -> i32 {
    if err.is_segmentation_failure() { EXIT_SEGMENTATION } else { EXIT_USAGE }
}

fn error_json(err: &Error) -> Value {
    json!({ "name": err.name(), "message": err.to_string() })
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// What the CLI reads: either a stack directory or one loose image.
enum Input {
    Stack(PerfusionStack),
    Single(GrayImage),
}

impl Input {
    fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            PerfusionStack::load(path).map(Input::Stack)
        } else {
            load_image(path).map(Input::Single)
        }
    }

    fn num_slices(&self) -> usize {
        match self {
            Input::Stack(s) => s.num_slices(),
            Input::Single(_) => 1,
        }
    }

    /// A loose image is its own working image whatever the timepoint.
    fn working_image(&self, slice: usize, timepoint: usize) -> Result<&GrayImage> {
        match self {
            Input::Stack(s) => s.working_image(slice, Some(timepoint)),
            Input::Single(img) if slice == 0 => Ok(img),
            Input::Single(_) => Err(Error::IndexOutOfRange { what: "slice", index: slice, len: 1 }),
        }
    }
}

#[derive(Debug, Serialize)]
struct ParamsEcho {
    corner: Corner,
    seed_override: Option<Point2D>,
    planner: PlannerParams,
    cusum: CusumConfig,
}

impl From<&PipelineConfig> for ParamsEcho {
    fn from(c: &PipelineConfig) -> Self {
        Self {
            corner: c.seed.corner,
            seed_override: c.seed_override,
            planner: c.planner.clone(),
            cusum: c.tracker.cusum.clone(),
        }
    }
}

/// Segments one slice; returns its report and exit code. The mask is written
/// only on success.
fn segment_slice(input: &Input, slice: usize, args: &SegmentArgs, mask_path: &Path) -> (Value, i32) {
    let start = Instant::now();
    let mut report = json!({
        "slice": slice,
        "timepoint": args.timepoint,
        "mask": mask_path,
    });
    let outcome = input.working_image(slice, args.timepoint).and_then(|img| {
        let config = args.tuning.pipeline_config(img);
        report["params"] = serde_json::to_value(ParamsEcho::from(&config)).expect("params serialize");
        let seg = segment_image(img, &config)?;
        if let Some(dir) = mask_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        save_mask(&seg.mask, mask_path)?;
        Ok(seg)
    });
    let code = match outcome {
        Ok(seg) => {
            report["status"] = json!("ok");
            report["seed"] = json!(seg.trace.seed);
            report["termination"] = json!(seg.trace.termination.as_str());
            report["num_change_points"] = json!(seg.trace.change_points.len());
            report["mask_pixels"] = json!(seg.mask.count_ones());
            report["degenerate_contour"] = json!(seg.degenerate_contour);
            report["error"] = Value::Null;
            EXIT_OK
        }
        Err(err) => {
            report["status"] = json!("error");
            if let Error::TrackerDiverged { partial, .. } = &err {
                report["seed"] = json!(partial.seed);
                report["termination"] = json!(partial.termination.as_str());
                report["num_change_points"] = json!(partial.change_points.len());
            }
            report["error"] = error_json(&err);
            exit_code(&err)
        }
    };
    report["wall_time_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    (report, code)
}

pub fn cmd_segment(args: &SegmentArgs) -> i32 {
    let report_path = args.report.clone().unwrap_or_else(|| {
        if args.all_slices { args.output.join("report.json") } else { args.output.with_extension("json") }
    });
    let input = match Input::load(&args.input) {
        Ok(i) => i,
        Err(err) => {
            eprintln!("error: {err}");
            let report = json!({ "input": args.input, "status": "error", "error": error_json(&err) });
            let _ = write_json(&report_path, &report);
            return exit_code(&err);
        }
    };

    let (report, code) = if args.all_slices {
        if let Err(e) = fs::create_dir_all(&args.output) {
            let err = Error::io(&args.output, e);
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
        let n = input.num_slices();
        let next = AtomicUsize::new(0);
        let mut results: Vec<Option<(Value, i32)>> = vec![None; n];
        let jobs = args.jobs.clamp(1, n.max(1));
        std::thread::scope(|scope| {
            let workers: Vec<_> = (0..jobs)
                .map(|_| {
                    scope.spawn(|| {
                        let mut done = Vec::new();
                        loop {
                            let s = next.fetch_add(1, Ordering::Relaxed);
                            if s >= n {
                                break done;
                            }
                            let path = args.output.join(format!("s{s}_mask.pgm"));
                            done.push((s, segment_slice(&input, s, args, &path)));
                        }
                    })
                })
                .collect();
            for w in workers {
                for (s, r) in w.join().expect("worker panicked") {
                    results[s] = Some(r);
                }
            }
        });
        let results: Vec<(Value, i32)> = results.into_iter().map(|r| r.expect("every slice ran")).collect();
        let code = results.iter().map(|r| r.1).max().unwrap_or(EXIT_OK);
        let slices: Vec<Value> = results.into_iter().map(|r| r.0).collect();
        (json!({ "input": args.input, "slices": slices }), code)
    } else {
        let (mut report, code) = segment_slice(&input, args.slice, args, &args.output);
        report["input"] = json!(args.input);
        (report, code)
    };

    if let Some(errors) = failures(&report) {
        eprintln!("segmentation failed: {errors}");
    }
    match write_json(&report_path, &report) {
        Ok(()) => code,
        Err(err) => {
            eprintln!("error: {err}");
            code.max(EXIT_USAGE)
        }
    }
}

fn failures(report: &Value) -> Option<String> {
    let one = |r: &Value| r["error"]["name"].as_str().map(str::to_owned);
    let names: Vec<String> = match report["slices"].as_array() {
        Some(slices) => slices.iter().filter_map(one).collect(),
        None => one(report).into_iter().collect(),
    };
    (!names.is_empty()).then(|| names.join(", "))
}

pub fn cmd_eval(args: &EvalArgs) -> i32 {
    let outcome = (|| -> Result<Value> {
        let mask = load_mask(&args.mask)?;
        let reference = load_mask(&args.reference)?;
        let mut report = json!({
            "mask": args.mask,
            "reference": args.reference,
            "cusum": evaluate(&mask, &reference)?,
        });
        if let Some(path) = &args.baseline_image {
            let img = load_image(path)?;
            report["best_threshold"] = serde_json::to_value(best_threshold_baseline(&img, &reference)?)
                .expect("baseline serializes");
        }
        Ok(report)
    })();
    let (report, code) = match outcome {
        Ok(r) => (r, EXIT_OK),
        Err(err) => {
            eprintln!("error: {err}");
            (json!({ "mask": args.mask, "reference": args.reference, "error": error_json(&err) }), EXIT_USAGE)
        }
    };
    match &args.report {
        Some(path) => match write_json(path, &report) {
            Ok(()) => code,
            Err(err) => {
                eprintln!("error: {err}");
                EXIT_USAGE
            }
        },
        None => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            code
        }
    }
}

fn phantom_spec(args: &PhantomArgs) -> Result<PhantomSpec> {
    if let Some(path) = &args.spec {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()));
    }
    let mut spec = PhantomSpec::default();
    if let Some(s) = args.sigma {
        spec.noise_sigma = s;
    }
    if let Some(s) = args.rng_seed {
        spec.rng_seed = s;
    }
    if let Some(t) = args.timepoints {
        spec.num_timepoints = t;
    }
    match args.truth.as_deref() {
        None | Some("outer") => {}
        Some("inner") => spec.truth = TruthRegion::Inner,
        Some(other) => return Err(Error::InvalidSpec(format!("unknown truth region {other:?}"))),
    }
    Ok(spec)
}

pub fn cmd_phantom(args: &PhantomArgs) -> i32 {
    let outcome = phantom_spec(args).and_then(|spec| {
        let (stack, truth) = generate(&spec)?;
        stack.save(&args.output)?;
        save_mask(&truth, args.output.join("ground_truth.pgm"))?;
        write_json(&args.output.join("phantom.json"), &serde_json::to_value(&spec).expect("spec serializes"))
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_USAGE
        }
    }
}

pub fn cmd_trace_dump(args: &TraceDumpArgs) -> i32 {
    let input = match Input::load(&args.input) {
        Ok(i) => i,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    };
    let img = match input.working_image(args.slice, args.timepoint) {
        Ok(i) => i,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    };
    let mut config = args.tuning.pipeline_config(img);
    config.tracker.record_steps = true;
    let (steps, code) = match segment_boundary(img, &config.seed, config.seed_override, &config.planner, &config.tracker) {
        Ok(trace) => (trace.steps, EXIT_OK),
        // a diverged run is exactly what one wants to look at
        Err(Error::TrackerDiverged { partial, max_steps }) => {
            eprintln!("tracker did not close within {max_steps} steps; dumping partial trace");
            (partial.steps, EXIT_SEGMENTATION)
        }
        Err(err) => {
            eprintln!("error: {err}");
            return exit_code(&err);
        }
    };
    let written = match &args.output {
        Some(path) => fs::File::create(path)
            .and_then(|f| write_trace_csv(&steps, std::io::BufWriter::new(f)))
            .map_err(|e| Error::io(path, e)),
        None => write_trace_csv(&steps, std::io::stdout().lock()).map_err(|e| Error::io("<stdout>", e)),
    };
    match written {
        Ok(()) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_USAGE
        }
    }
}

