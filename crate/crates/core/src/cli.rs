//! Command-line front end: `detect`, `eval`, `bench` and `synth`.
//!
//! Every run prints its fully resolved configuration as `# key = value` lines,
//! then human-readable results, then a single `RESULT key=value ...` line.
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::detector::{detect, DetectorConfig, Variant};
use crate::eval::{
    benchmark_throughput, compute_metrics, label_events, Metrics, DEFAULT_RADIUS_FP, DEFAULT_RADIUS_TP,
};
use crate::event::{Event, SensorGeometry, NANOS_PER_SEC};
use crate::filter::DEFAULT_WINDOW_NS;
use crate::harris::{RefinerConfig, DEFAULT_ALPHA, DEFAULT_N_NEWEST, DEFAULT_SIGMA, DEFAULT_THRESHOLD};
use crate::io::{read_events, read_tracks, write_corners, write_events, write_tracks};
use crate::synth::{generate, square, SceneSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "evcorner", version, about = "Corner detection on event-camera streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay an event file and write the detected corners.
    Detect(DetectArgs),
    /// Label corners against ground-truth tracks and print metrics.
    Eval(EvalArgs),
    /// Time a single-threaded replay of an event file.
    Bench(BenchArgs),
    /// Generate a translating-polygon scene with vertex tracks.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct GeometryArgs {
    #[arg(long, default_value_t = 240)]
    width: u16,
    #[arg(long, default_value_t = 180)]
    height: u16,
}

impl GeometryArgs {
    fn resolve(&self) -> Result<SensorGeometry, CliError> {
        SensorGeometry::new(self.width, self.height).map_err(|e| CliError::Usage(format!("--width/--height: {e}")))
    }
}

#[derive(Debug, Args)]
struct DetectorArgs {
    #[arg(long, default_value = "fa-harris")]
    variant: Variant,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Filter window in microseconds.
    #[arg(long, default_value_t = DEFAULT_WINDOW_NS / 1000)]
    filter_window_us: i64,
    /// Pass every event to the surface.
    #[arg(long)]
    no_filter: bool,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, allow_negative_numbers = true)]
    harris_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    harris_alpha: f64,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    harris_sigma: f64,
    /// Number of newest cells set to one in the binary patch.
    #[arg(long, default_value_t = DEFAULT_N_NEWEST)]
    harris_n_newest: usize,
}

impl DetectorArgs {
    fn resolve(&self) -> Result<DetectorConfig, CliError> {
        if self.filter_window_us < 0 {
            return Err(CliError::Usage(format!("--filter-window-us must be >= 0, got {}", self.filter_window_us)));
        }
        let refiner = RefinerConfig {
            alpha: self.harris_alpha,
            sigma: self.harris_sigma,
            n_newest: self.harris_n_newest,
            threshold: self.harris_threshold,
            ..RefinerConfig::default()
        };
        refiner.validate().map_err(|e| CliError::Usage(format!("harris flags: {e}")))?;
        Ok(DetectorConfig {
            filter_window: (!self.no_filter).then_some(self.filter_window_us * 1000),
            refiner,
            ..DetectorConfig::new(self.geometry.resolve()?, self.variant)
        })
    }
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    detector: DetectorArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    corners: PathBuf,
    #[arg(long)]
    tracks: PathBuf,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long, default_value_t = DEFAULT_RADIUS_TP)]
    radius_tp: f64,
    #[arg(long, default_value_t = DEFAULT_RADIUS_FP)]
    radius_fp: f64,
    /// Only events earlier than this many seconds are evaluated (`inf` for all).
    #[arg(long, default_value_t = 10.0)]
    max_seconds: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    detector: DetectorArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out_events: PathBuf,
    #[arg(long)]
    out_tracks: PathBuf,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Convex polygon as `x,y;x,y;...` in pixels; defaults to a 40 px square at (60, 50).
    #[arg(long)]
    polygon: Option<String>,
    /// Pixels per second along x.
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    vx: f64,
    /// Pixels per second along y.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    vy: f64,
    /// Seconds.
    #[arg(long, default_value_t = 4.0)]
    duration: f64,
    /// Events per pixel of edge length per second.
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
    /// Uniform background events per second.
    #[arg(long, default_value_t = 0.0)]
    noise_rate: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn parse_polygon(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (x, y) = pair
                .split_once(',')
                .ok_or_else(|| CliError::Usage(format!("--polygon: expected `x,y`, got {pair:?}")))?;
            let coord = |v: &str| {
                v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--polygon: bad number {v:?}")))
            };
            Ok((coord(x)?, coord(y)?))
        })
        .collect()
}

struct Report {
    text: String,
    result: Vec<(String, String)>,
}

impl Report {
    fn new(command: &str) -> Self {
        Report { text: format!("# evcorner {command}\n"), result: Vec::new() }
    }

    fn config(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "# {key} = {value}");
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn result(&mut self, key: &str, value: impl std::fmt::Display) {
        self.result.push((key.to_string(), value.to_string()));
    }

    fn finish(mut self) -> String {
        let fields: Vec<String> = self.result.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(self.text, "RESULT {}", fields.join(" "));
        self.text
    }
}

fn describe_detector(report: &mut Report, cfg: &DetectorConfig) {
    report.config("variant", cfg.variant);
    report.config("geometry", cfg.geometry);
    match cfg.filter_window {
        Some(w) => report.config("filter_window_us", w / 1000),
        None => report.config("filter_window_us", "off"),
    }
    report.config("harris_threshold", cfg.refiner.threshold);
    report.config("harris_alpha", cfg.refiner.alpha);
    report.config("harris_sigma", cfg.refiner.sigma);
    report.config("harris_n_newest", cfg.refiner.n_newest);
    report.config("inner_ring", format!("r=3 n=16 arc=[{},{}]", cfg.mask.inner.min_arc, cfg.mask.inner.max_arc));
    report.config("outer_ring", format!("r=4 n=20 arc=[{},{}]", cfg.mask.outer.min_arc, cfg.mask.outer.max_arc));
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "absent".to_string(), |v| format!("{v:.4}"))
}

fn run_detect(args: &DetectArgs) -> Result<String, CliError> {
    let cfg = args.detector.resolve()?;
    let mut report = Report::new("detect");
    report.config("input", args.input.display());
    report.config("output", args.output.display());
    describe_detector(&mut report, &cfg);

    let events = read_events(&args.input, &cfg.geometry).map_err(data)?;
    let (corners, counters) = detect(&cfg, &events).map_err(|e| CliError::Usage(e.to_string()))?;
    write_corners(&args.output, &corners).map_err(data)?;

    let reduction = compute_metrics(Default::default(), counters.events_in, counters.corners).reduction;
    report.line(format!("events in:            {}", counters.events_in));
    report.line(format!("passed filter:        {}", counters.events_passed_filter));
    report.line(format!("candidates:           {}", counters.candidates));
    report.line(format!("corners:              {}", counters.corners));
    report.line(format!("reduction [%]:        {}", fmt_opt(reduction)));
    report.result("variant", cfg.variant);
    report.result("events", counters.events_in);
    report.result("passed_filter", counters.events_passed_filter);
    report.result("candidates", counters.candidates);
    report.result("corners", counters.corners);
    report.result("reduction", fmt_opt(reduction));
    Ok(report.finish())
}

fn run_eval(args: &EvalArgs) -> Result<String, CliError> {
    let geometry = args.geometry.resolve()?;
    if args.max_seconds.is_nan() || args.max_seconds <= 0.0 {
        return Err(CliError::Usage(format!("--max-seconds must be positive, got {}", args.max_seconds)));
    }
    if !(0.0 <= args.radius_tp && args.radius_tp <= args.radius_fp) {
        return Err(CliError::Usage(format!(
            "--radius-tp ({}) must be in [0, --radius-fp ({})]",
            args.radius_tp, args.radius_fp
        )));
    }
    let mut report = Report::new("eval");
    report.config("events", args.events.display());
    report.config("corners", args.corners.display());
    report.config("tracks", args.tracks.display());
    report.config("geometry", geometry);
    report.config("radius_tp", args.radius_tp);
    report.config("radius_fp", args.radius_fp);
    report.config("max_seconds", args.max_seconds);

    let events = read_events(&args.events, &geometry).map_err(data)?;
    let corners = read_events(&args.corners, &geometry).map_err(data)?;
    let tracks = read_tracks(&args.tracks).map_err(data)?;

    let limit = args.max_seconds * NANOS_PER_SEC as f64;
    let within = |e: &&Event| (e.t as f64) < limit;
    let events: Vec<Event> = events.iter().filter(within).copied().collect();
    let corners: Vec<Event> = corners.iter().filter(within).copied().collect();

    let counts = label_events(&events, &corners, &tracks, args.radius_tp, args.radius_fp).map_err(data)?;
    let Metrics { fpr, accuracy, reduction, .. } =
        compute_metrics(counts, events.len() as u64, corners.len() as u64);

    report.line(format!("events evaluated:     {}", events.len()));
    report.line(format!("corners evaluated:    {}", corners.len()));
    report.line(format!("TP/FP/FN/TN:          {}/{}/{}/{}", counts.tp, counts.fp, counts.fn_, counts.tn));
    report.line(format!("FPR [%]:              {}", fmt_opt(fpr)));
    report.line(format!("accuracy [%]:         {}", fmt_opt(accuracy)));
    report.line(format!("reduction [%]:        {}", fmt_opt(reduction)));
    report.result("events", events.len());
    report.result("corners", corners.len());
    report.result("tp", counts.tp);
    report.result("fp", counts.fp);
    report.result("fn", counts.fn_);
    report.result("tn", counts.tn);
    report.result("fpr", fmt_opt(fpr));
    report.result("accuracy", fmt_opt(accuracy));
    report.result("reduction", fmt_opt(reduction));
    Ok(report.finish())
}

fn run_bench(args: &BenchArgs) -> Result<String, CliError> {
    let cfg = args.detector.resolve()?;
    let mut report = Report::new("bench");
    report.config("input", args.input.display());
    describe_detector(&mut report, &cfg);

    let events = read_events(&args.input, &cfg.geometry).map_err(data)?;
    if events.is_empty() {
        return Err(CliError::Data(format!("{}: no events to benchmark", args.input.display())));
    }
    let bench = benchmark_throughput(&cfg, &events).map_err(|e| CliError::Usage(e.to_string()))?;
    report.line(format!("events:               {}", bench.events));
    report.line(format!("wall time [s]:        {:.6}", bench.elapsed.as_secs_f64()));
    report.line(format!("time per event [us]:  {:.4}", bench.throughput.us_per_event));
    report.line(format!("max event rate [Meps]: {:.4}", bench.throughput.meps));
    report.line(format!("corners:              {}", bench.counters.corners));
    report.result("variant", bench.variant);
    report.result("events", bench.events);
    report.result("seconds", format!("{:.6}", bench.elapsed.as_secs_f64()));
    report.result("us_per_event", format!("{:.4}", bench.throughput.us_per_event));
    report.result("meps", format!("{:.4}", bench.throughput.meps));
    report.result("corners", bench.counters.corners);
    Ok(report.finish())
}

fn run_synth(args: &SynthArgs) -> Result<String, CliError> {
    let polygon = match &args.polygon {
        Some(s) => parse_polygon(s)?,
        None => square(60.0, 50.0, 40.0),
    };
    let spec = SceneSpec {
        geometry: args.geometry.resolve()?,
        polygon,
        velocity: (args.vx, args.vy),
        duration: args.duration,
        edge_event_rate: args.rate,
        noise_rate: args.noise_rate,
        seed: args.seed,
    };
    let mut report = Report::new("synth");
    report.config("out_events", args.out_events.display());
    report.config("out_tracks", args.out_tracks.display());
    report.config("geometry", spec.geometry);
    let poly: Vec<String> = spec.polygon.iter().map(|(x, y)| format!("{x},{y}")).collect();
    report.config("polygon", poly.join(";"));
    report.config("velocity", format!("{},{}", spec.velocity.0, spec.velocity.1));
    report.config("duration", spec.duration);
    report.config("rate", spec.edge_event_rate);
    report.config("noise_rate", spec.noise_rate);
    report.config("seed", spec.seed);

    let scene = generate(&spec).map_err(|e| CliError::Usage(format!("scene: {e}")))?;
    write_events(&args.out_events, &scene.events).map_err(data)?;
    write_tracks(&args.out_tracks, &scene.tracks).map_err(data)?;
    let points: usize = scene.tracks.iter().map(|t| t.points.len()).sum();
    report.line(format!("events:               {}", scene.events.len()));
    report.line(format!("tracks:               {} ({} points)", scene.tracks.len(), points));
    report.result("events", scene.events.len());
    report.result("tracks", scene.tracks.len());
    report.result("track_points", points);
    Ok(report.finish())
}

/// Parses `args` (including the program name) and runs the subcommand,
/// writing results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Detect(a) => run_detect(a),
        Command::Eval(a) => run_eval(a),
        Command::Bench(a) => run_bench(a),
        Command::Synth(a) => run_synth(a),
    };
    match outcome {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}
