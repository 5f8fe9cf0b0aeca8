//! `cineforge`: batch entry point for scenes, condition bundles, labeling and metrics.
//!
//! Exit status is 0 on success, 1 when an input fails validation or cannot be
//! processed, and 2 on usage errors. Diagnostics go to standard error; machine
//! output goes to files, or to standard output with `--output -`.

use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cineforge_core::autolabel::{label_clip, LabelError, LabelOptions};
use cineforge_core::io::bundle::{export_condition_bundle, json_bytes, validate_bundle, BundleSettings, DepthEncoding};
use cineforge_core::io::camera::write_camera_txt;
use cineforge_core::io::eval::{fill_ground_truth, parse_eval_jsonl};
use cineforge_core::io::ingest::{ingest_label_inputs, write_synth_clip};
use cineforge_core::io::raster::DEFAULT_DEPTH_SCALE;
use cineforge_core::io::scene_doc::{load_scene, SceneDocument};
use cineforge_core::io::{read_text, write_atomic, FormatError};
use cineforge_core::metrics::{evaluate, DepthReference};
use cineforge_core::par::{self, Exec};
use cineforge_core::render::RenderSettings;
use cineforge_core::synth::{synth_clip, SynthOptions};
use cineforge_service::{AppState, Store};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "cineforge", version, about = "Scene direction: render condition bundles, auto-label clips, evaluate, serve the editor API")]
struct Cli {
    /// Worker threads (default: number of processors).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a scene document into a condition bundle.
    Render(RenderArgs),
    /// Recover a scene from an ingest directory.
    Label(LabelArgs),
    /// Evaluate prediction/ground-truth pairs from a JSON-lines file.
    Metrics(MetricsArgs),
    /// Write the per-frame camera extrinsics of a scene.
    ExportCamera(ExportCameraArgs),
    /// Check a scene document or a condition bundle.
    Validate(ValidateArgs),
    /// Generate a synthetic ingest directory with ground truth.
    Synth(SynthArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DepthFormat {
    Png16,
    Pfm,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Bundle directory; replaced atomically if it exists.
    #[arg(long)]
    out: PathBuf,
    /// Output width; rescales the intrinsics.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    width: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    height: Option<u32>,
    #[arg(long, default_value_t = RenderSettings::default().near)]
    near: f64,
    #[arg(long, default_value_t = RenderSettings::default().far)]
    far: f64,
    #[arg(long, value_enum, default_value = "png16")]
    depth_format: DepthFormat,
    /// Meters per PNG16 unit.
    #[arg(long, default_value_t = DEFAULT_DEPTH_SCALE)]
    depth_scale: f64,
}

#[derive(Debug, Args)]
struct LabelArgs {
    /// Ingest directory, or `-` to read its path from standard input.
    #[arg(long)]
    input: String,
    /// Scene document to write, or `-`.
    #[arg(long, default_value = "-")]
    output: String,
    /// Per-entity report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Depth outlier cut in scaled MADs.
    #[arg(long, default_value_t = 3.0)]
    mad_k: f64,
    /// Keep every masked pixel.
    #[arg(long)]
    no_outlier_rejection: bool,
    /// IoU above which overlapping detections are suppressed.
    #[arg(long, default_value_t = 0.5)]
    iou_threshold: f64,
    /// Detections scoring below this are ignored.
    #[arg(long, default_value_t = 0.0)]
    score_floor: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DepthRef {
    Center,
    NearestFace,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    pairs: PathBuf,
    /// Fill ground truth of frames naming an `entity_id` from this scene.
    #[arg(long)]
    gt_scene: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "center")]
    depth_ref: DepthRef,
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Debug, Args)]
struct ExportCameraArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// `scene.json` or a bundle directory.
    path: PathBuf,
    /// Also write `{violations, warnings}` as JSON here, or `-`.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    /// Ingest directory to create; its path is printed on standard output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SynthOptions::default().frame_count, value_parser = clap::value_parser!(u32).range(1..))]
    frames: u32,
    #[arg(long, default_value_t = SynthOptions::default().min_entities)]
    min_entities: usize,
    #[arg(long, default_value_t = SynthOptions::default().max_entities)]
    max_entities: usize,
    #[arg(long, default_value_t = SynthOptions::default().width, value_parser = clap::value_parser!(u32).range(1..))]
    width: u32,
    #[arg(long, default_value_t = SynthOptions::default().height, value_parser = clap::value_parser!(u32).range(1..))]
    height: u32,
    #[arg(long, default_value_t = SynthOptions::default().focal)]
    focal: f64,
    #[arg(long)]
    static_camera: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Persist scenes here; in memory when omitted.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Format(#[from] FormatError),
    #[error("{0}")]
    Label(#[from] LabelError),
    #[error("{count} violation(s)")]
    Invalid { count: usize },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CINEFORGE_LOG", "warn")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Invalid { .. }) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult {
    if let Some(n) = cli.jobs {
        par::configure_threads(n as usize).map_err(CliError::Runtime)?;
    }
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.command {
        Command::Render(a) => render(a, exec),
        Command::Label(a) => label(a, exec),
        Command::Metrics(a) => metrics(a),
        Command::ExportCamera(a) => export_camera(a),
        Command::Validate(a) => validate(a),
        Command::Synth(a) => synth(a, exec),
        Command::Serve(a) => serve(a),
    }
}

/// Writes to `target`, or to standard output for `-`.
fn emit(target: &str, bytes: &[u8]) -> CliResult {
    if target == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::Runtime(format!("stdout: {e}")))
    } else {
        Ok(write_atomic(Path::new(target), bytes)?)
    }
}

fn require_file(flag: &str, p: &Path) -> CliResult {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag} {}: no such file", p.display())))
    }
}

fn require_dir(flag: &str, p: &Path) -> CliResult {
    if p.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag} {}: no such directory", p.display())))
    }
}

fn positive(flag: &str, v: f64) -> CliResult {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag} must be a positive number, got {v}")))
    }
}

fn render(a: RenderArgs, exec: Exec) -> CliResult {
    require_file("--scene", &a.scene)?;
    positive("--near", a.near)?;
    positive("--depth-scale", a.depth_scale)?;
    if !(a.far.is_finite() && a.far > a.near) {
        return Err(CliError::Usage(format!("--far must exceed --near, got {}", a.far)));
    }
    let doc = load_scene(&a.scene)?;
    let scene = doc.to_scene();
    let depth = match a.depth_format {
        DepthFormat::Png16 => DepthEncoding::Png16 { scale: a.depth_scale },
        DepthFormat::Pfm => DepthEncoding::Pfm,
    };
    let settings = BundleSettings { render: RenderSettings { width: a.width, height: a.height, near: a.near, far: a.far }, depth, exec };
    let summary = export_condition_bundle(&scene, &settings, &a.out)?;
    log::info!(
        "wrote {}: {} frames at {}x{}, {} entities",
        a.out.display(),
        summary.frame_count,
        summary.width,
        summary.height,
        summary.entities
    );
    Ok(())
}

fn label(a: LabelArgs, exec: Exec) -> CliResult {
    let input = if a.input == "-" {
        let mut line = String::new();
        std::io::stdin().lock().read_line(&mut line).map_err(|e| CliError::Runtime(format!("stdin: {e}")))?;
        PathBuf::from(line.trim())
    } else {
        PathBuf::from(&a.input)
    };
    require_dir("--input", &input)?;
    if !a.no_outlier_rejection {
        positive("--mad-k", a.mad_k)?;
    }
    if !(0.0..=1.0).contains(&a.iou_threshold) {
        return Err(CliError::Usage(format!("--iou-threshold must be in [0, 1], got {}", a.iou_threshold)));
    }
    let inputs = ingest_label_inputs(&input, exec)?;
    let opts = LabelOptions {
        mad_k: (!a.no_outlier_rejection).then_some(a.mad_k),
        iou_threshold: a.iou_threshold,
        score_floor: a.score_floor,
        exec,
        ..LabelOptions::default()
    };
    let out = label_clip(&inputs, &opts)?;
    for d in &out.report.dropped {
        log::warn!("entity {} dropped: {}", d.id, d.reason);
    }
    log::info!("recovered {} entities over {} frames", out.report.entities.len(), out.scene.frame_count);
    if let Some(r) = &a.report {
        write_atomic(r, &json_bytes(&out.report))?;
    }
    emit(&a.output, SceneDocument::from_scene(&out.scene).to_json().as_bytes())
}

fn metrics(a: MetricsArgs) -> CliResult {
    require_file("--pairs", &a.pairs)?;
    let text = read_text(&a.pairs)?;
    let mut pairs = parse_eval_jsonl(&text).map_err(|e| FormatError::File { path: a.pairs.clone(), source: Box::new(e) })?;
    let mut resolution = None;
    if let Some(gt) = &a.gt_scene {
        require_file("--gt-scene", gt)?;
        let scene = load_scene(gt)?.to_scene();
        let mode = match a.depth_ref {
            DepthRef::Center => DepthReference::Center,
            DepthRef::NearestFace => DepthReference::NearestFace,
        };
        let unfilled = fill_ground_truth(&mut pairs, &scene, mode);
        if unfilled > 0 {
            log::warn!("{unfilled} frame(s) kept their own ground truth: no entity_id, unknown entity, or box off screen");
        }
        resolution = Some([scene.camera.intrinsics.width, scene.camera.intrinsics.height]);
    }
    let report = evaluate(&pairs, resolution);
    emit(&a.output, &json_bytes(&report))
}

fn export_camera(a: ExportCameraArgs) -> CliResult {
    require_file("--scene", &a.scene)?;
    let scene = load_scene(&a.scene)?.to_scene();
    emit(&a.output, write_camera_txt(&scene.export_camera_rt()).as_bytes())
}

fn validate(a: ValidateArgs) -> CliResult {
    let (violations, warnings): (Vec<String>, Vec<String>) = if a.path.is_dir() {
        (validate_bundle(&a.path), Vec::new())
    } else if a.path.is_file() {
        match load_scene(&a.path) {
            Ok(doc) => {
                let scene = doc.to_scene();
                (
                    scene.validate().iter().map(|v| v.to_string()).collect(),
                    scene.warnings().iter().map(|w| w.to_string()).collect(),
                )
            }
            Err(e) => (vec![e.to_string()], Vec::new()),
        }
    } else {
        return Err(CliError::Usage(format!("{}: no such file or directory", a.path.display())));
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    for v in &violations {
        eprintln!("violation: {v}");
    }
    if let Some(out) = &a.output {
        emit(out, &json_bytes(&json!({ "violations": violations, "warnings": warnings })))?;
    }
    if violations.is_empty() {
        eprintln!("{}: ok", a.path.display());
        Ok(())
    } else {
        eprintln!("{}: {} violation(s)", a.path.display(), violations.len());
        Err(CliError::Invalid { count: violations.len() })
    }
}

fn synth(a: SynthArgs, exec: Exec) -> CliResult {
    if a.min_entities == 0 || a.min_entities > a.max_entities {
        return Err(CliError::Usage(format!(
            "--min-entities and --max-entities need 1 <= min <= max, got {} and {}",
            a.min_entities, a.max_entities
        )));
    }
    positive("--focal", a.focal)?;
    let opts = SynthOptions {
        frame_count: a.frames,
        min_entities: a.min_entities,
        max_entities: a.max_entities,
        width: a.width,
        height: a.height,
        focal: a.focal,
        moving_camera: !a.static_camera,
        exec,
        ..SynthOptions::default()
    };
    let clip = synth_clip(a.seed, &opts);
    write_synth_clip(&clip, &a.out, exec)?;
    emit("-", format!("{}\n", a.out.display()).as_bytes())
}

fn serve(a: ServeArgs) -> CliResult {
    let store = match &a.data_dir {
        Some(d) => Store::open(d)?,
        None => Store::in_memory(),
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    rt.block_on(cineforge_service::serve(a.listen, AppState::new(store))).map_err(|e| CliError::Runtime(format!("{}: {e}", a.listen)))
}
