use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{FixedOffset, NaiveDate};
use log::warn;

use proxrisk::analytics::{build_report, AnalyticsError, JsonlLogStore, Period};
use proxrisk::calibration::{
    calibrate as fit_calibration, parse_points_input, CalibrationError, CalibrationOptions, MarkerGrid,
};
use proxrisk::evaluation::{compute_metrics, read_eval_frames, EvalGeometry, EvaluationError};
use proxrisk::geometry::{CameraModel, GroundPoint, RansacParams};
use proxrisk::ingest::{read_detections, IngestError};
use proxrisk::pipeline::{Pipeline, PipelineError, RunConfig};

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const STORAGE: u8 = 3;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn fail(code: u8, message: impl std::fmt::Display) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

impl From<CalibrationError> for Failure {
    fn from(e: CalibrationError) -> Self {
        let code = match e {
            CalibrationError::Storage(_) => STORAGE,
            CalibrationError::InvalidGrid(_) => USAGE,
            _ => DATA,
        };
        fail(code, e)
    }
}

impl From<EvaluationError> for Failure {
    fn from(e: EvaluationError) -> Self {
        let code = match e {
            EvaluationError::Io(_) => STORAGE,
            EvaluationError::InvalidArgument(_) => USAGE,
            _ => DATA,
        };
        fail(code, e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Config(_) => USAGE,
            PipelineError::Calibration(c) => return c.clone().into(),
            PipelineError::Analytics(AnalyticsError::GridTooLarge { .. } | AnalyticsError::InvalidCellSize(_)) => {
                USAGE
            }
            PipelineError::Analytics(AnalyticsError::NonFinite(_)) => DATA,
            PipelineError::Analytics(_) | PipelineError::Storage(_) | PipelineError::Ingest(IngestError::Io(_)) => {
                STORAGE
            }
            PipelineError::Ingest(_) => DATA,
        };
        fail(code, e)
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| fail(STORAGE, format!("stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| fail(STORAGE, format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(STORAGE, format!("{}: {e}", path.display())))
}

pub struct CalibrateArgs {
    pub grid_spacing: Option<f64>,
    pub grid_spacing_y: Option<f64>,
    pub points: PathBuf,
    pub out: PathBuf,
    pub camera_id: String,
    pub max_rms: f64,
    pub seed: u64,
}

pub fn calibrate(args: CalibrateArgs) -> Result<(), Failure> {
    let input = parse_points_input(&read_input(&args.points)?)?;
    let (sx, sy, origin) = match (args.grid_spacing, input.grid) {
        (Some(s), _) => (s, args.grid_spacing_y.unwrap_or(s), GroundPoint::new(0.0, 0.0)),
        (None, Some((sx, sy, origin))) => (sx, args.grid_spacing_y.unwrap_or(sy), origin),
        (None, None) => {
            return Err(fail(
                USAGE,
                "--grid-spacing is required unless the points file is an annotation document",
            ))
        }
    };
    let grid = MarkerGrid::new(sx, sy, origin)?;
    let options = CalibrationOptions {
        camera_id: args.camera_id,
        ransac: RansacParams {
            seed: args.seed,
            ..Default::default()
        },
        max_rms_px: args.max_rms,
        ..Default::default()
    };
    let mut cal = fit_calibration(&grid, &input.clicked_pixels, &options)?;
    if let Some(polygon) = &input.walking_area_pixels {
        cal = cal.set_walking_area(polygon)?;
    }
    cal.save(&args.out)?;
    let summary = serde_json::json!({
        "camera_id": cal.camera_id,
        "rms_backprojection_px": cal.rms_backprojection_px,
        "walking_area": cal.walking_area.is_some(),
        "out": args.out.display().to_string(),
    });
    println!("{summary}");
    Ok(())
}

pub fn run(config_path: &Path) -> Result<(), Failure> {
    let config = RunConfig::load(config_path)?;
    config.validate()?;
    let calibration = proxrisk::calibration::Calibration::load(&config.calibration)?;
    let mut pipeline = Pipeline::new(&config, calibration)?;
    let reader = read_detections(&config.detections).map_err(|e| fail(STORAGE, e))?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for item in reader {
        let record = pipeline.process(item)?;
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| fail(STORAGE, format!("stdout: {e}")))?;
    }
    out.flush().map_err(|e| fail(STORAGE, format!("stdout: {e}")))?;
    let summary = pipeline.finish()?;
    if summary.degraded_frames > 0 {
        warn!("{} of {} frames were degraded", summary.degraded_frames, summary.frames);
    }
    Ok(())
}

pub fn evaluate(
    input: &Path,
    camera: &Path,
    thresholds: &[f64],
    ranges: &[f64],
    stride: u64,
    seed: u64,
    out_dir: &Path,
) -> Result<(), Failure> {
    let camera: CameraModel = serde_json::from_str(&read_input(camera)?)
        .map_err(|e| fail(DATA, format!("{}: {e}", camera.display())))?;
    let file = File::open(input).map_err(|e| fail(STORAGE, format!("{}: {e}", input.display())))?;
    let frames = read_eval_frames(BufReader::new(file))?;
    let geometry = EvalGeometry::build(&frames, &camera, seed)?;
    let mut dropped = 0;
    let ground: Vec<_> = frames
        .iter()
        .map(|f| {
            let (g, d) = geometry.ground_frame(f);
            dropped += d;
            g
        })
        .collect();
    if dropped > 0 {
        warn!("{dropped} image-space predictions mapped to infinity and were dropped");
    }
    let table = compute_metrics(&ground, thresholds, ranges, stride)?;
    fs::create_dir_all(out_dir).map_err(|e| fail(STORAGE, format!("{}: {e}", out_dir.display())))?;
    let csv = table.to_csv();
    write_output(&out_dir.join("metrics.csv"), &csv)?;
    write_output(&out_dir.join("metrics.json"), &(table.to_json() + "\n"))?;
    print!("{csv}");
    Ok(())
}

pub fn report(
    logs: &Path,
    period: Period,
    camera: &str,
    start: Option<NaiveDate>,
    utc_offset_minutes: i32,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let offset = FixedOffset::east_opt(utc_offset_minutes * 60)
        .ok_or_else(|| fail(USAGE, format!("UTC offset of {utc_offset_minutes} minutes is out of range")))?;
    let store = JsonlLogStore::new(logs, offset);
    let report = build_report(&store, period, camera, start).map_err(|e| {
        let code = match e {
            AnalyticsError::CorruptLog { .. } => DATA,
            _ => STORAGE,
        };
        fail(code, e)
    })?;
    if report.skipped_lines > 0 {
        warn!("skipped {} partial trailing log lines", report.skipped_lines);
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = out {
        let mut w = BufWriter::new(File::create(path).map_err(|e| fail(STORAGE, format!("{}: {e}", path.display())))?);
        writeln!(w, "{text}")
            .and_then(|_| w.flush())
            .map_err(|e| fail(STORAGE, format!("{}: {e}", path.display())))?;
    }
    println!("{text}");
    Ok(())
}
