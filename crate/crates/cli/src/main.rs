//! `proxrisk`: calibrate a camera, monitor a detection stream, score
//! detections against annotations and summarize stored logs.
//!
//! Exit status: 0 success, 1 usage or config error, 2 data error, 3 storage
//! error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use proxrisk::analytics::Period;

#[derive(Parser)]
#[command(name = "proxrisk", version, about = "Interpersonal-distance risk monitoring from person detections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a calibration from nine clicked marker centers.
    Calibrate {
        /// Distance between adjacent markers, meters. Defaults to the
        /// spacing recorded in an annotation file.
        #[arg(long)]
        grid_spacing: Option<f64>,
        /// Spacing along the grid's y axis when it differs from x.
        #[arg(long)]
        grid_spacing_y: Option<f64>,
        /// Annotation JSON, JSON array of [u, v] pairs, or text `u v` lines; `-` for stdin.
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "cam0")]
        camera_id: String,
        #[arg(long, default_value_t = proxrisk::calibration::DEFAULT_MAX_RMS_PX)]
        max_rms: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Process a detection stream; one JSON record per frame on stdout.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score ground-plane predictions against 3D foot annotations.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        camera: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = proxrisk::evaluation::DEFAULT_THRESHOLDS)]
        thresholds: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = proxrisk::evaluation::DEFAULT_RANGES)]
        ranges: Vec<f64>,
        #[arg(long, default_value_t = proxrisk::evaluation::DEFAULT_STRIDE)]
        stride: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving metrics.csv and metrics.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Aggregate a camera's logs into hourly statistics.
    Report {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        period: Period,
        #[arg(long)]
        camera: String,
        /// First local day of the period (YYYY-MM-DD); defaults to the period
        /// ending on the latest logged day.
        #[arg(long, value_parser = parse_date)]
        start: Option<NaiveDate>,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        utc_offset_minutes: i32,
        /// Also write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("{s:?}: {e}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { commands::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Calibrate {
            grid_spacing,
            grid_spacing_y,
            points,
            out,
            camera_id,
            max_rms,
            seed,
        } => commands::calibrate(commands::CalibrateArgs {
            grid_spacing,
            grid_spacing_y,
            points,
            out,
            camera_id,
            max_rms,
            seed,
        }),
        Command::Run { config } => commands::run(&config),
        Command::Evaluate {
            input,
            camera,
            thresholds,
            ranges,
            stride,
            seed,
            out_dir,
        } => commands::evaluate(&input, &camera, &thresholds, &ranges, stride, seed, &out_dir),
        Command::Report {
            logs,
            period,
            camera,
            start,
            utc_offset_minutes,
            out,
        } => commands::report(&logs, period, &camera, start, utc_offset_minutes, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
