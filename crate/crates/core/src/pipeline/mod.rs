//! The streaming monitor: detections in, per-frame risk records, logs and
//! map files out.

mod config;

pub use config::{Capacity, RunConfig, ENV_PREFIX};

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{FixedOffset, NaiveDate};
use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{
    count_infractions, dynamic_risk_map, AnalyticsError, JsonlLogStore, LogRecord, LogStore, MapGrid, OccupationMap,
};
use crate::calibration::{Calibration, CalibrationError};
use crate::ingest::{to_snapshot, DropCounts, FrameDetections, IngestError};
use crate::risk::{
    estimate_capacity, global_risk, link_severities, AlarmEvent, AlarmMonitor, Link, RiskParams, RiskState,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("storage error: {0}")]
    Storage(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// One output line of `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    /// Absent when the input line could not be parsed.
    pub frame_id: Option<u64>,
    pub timestamp: Option<f64>,
    pub count: usize,
    pub smoothed_count: f64,
    #[serde(rename = "G")]
    pub global_risk: f64,
    #[serde(rename = "D")]
    pub dynamic_risk: f64,
    pub infraction_pairs: usize,
    pub links: Vec<Link>,
    pub alarms: Vec<AlarmEvent>,
    pub dropped: DropCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Degraded frames so far, this one included.
    pub errors_total: usize,
}

/// Totals written to `run_summary_<camera>.json` when a run ends.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub camera_id: String,
    pub capacity: u32,
    pub frames: usize,
    pub degraded_frames: usize,
    pub dropped: DropCounts,
    pub alarms: usize,
    pub occupation_maps: Vec<String>,
}

struct MapState {
    area_template: MapGrid,
    day: Option<NaiveDate>,
    occupation: OccupationMap,
    latest: Option<MapGrid>,
}

/// Per-camera monitor state. Feed it frames in arrival order.
pub struct Pipeline {
    calibration: Calibration,
    camera_id: String,
    params: RiskParams,
    min_confidence: f64,
    cell_size: f64,
    max_cells: usize,
    map_every: u64,
    output_dir: PathBuf,
    risk: RiskState,
    alarms: AlarmMonitor,
    store: Option<JsonlLogStore>,
    maps: Option<MapState>,
    offset: FixedOffset,
    last_timestamp: Option<f64>,
    summary: RunSummary,
}

fn storage(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Storage(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|e| storage(path, e))
}

impl Pipeline {
    /// Resolves the capacity and prepares the output directory.
    pub fn new(config: &RunConfig, calibration: Calibration) -> Result<Self, PipelineError> {
        let capacity = match (config.capacity, &calibration.walking_area) {
            (Capacity::Fixed(c), _) => c,
            (Capacity::Auto, Some(area)) => estimate_capacity(area, config.tau),
            (Capacity::Auto, None) => {
                return Err(PipelineError::Config(
                    "capacity \"auto\" needs a walking area in the calibration".into(),
                ))
            }
        };
        let params = config.risk_params(capacity);
        params.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        let offset = FixedOffset::east_opt(config.utc_offset_minutes * 60)
            .ok_or_else(|| PipelineError::Config("utc_offset_minutes out of range".into()))?;
        let camera_id = config.camera_id.clone().unwrap_or_else(|| calibration.camera_id.clone());

        if config.write_logs || config.write_maps {
            fs::create_dir_all(&config.output_dir).map_err(|e| storage(&config.output_dir, e))?;
        }
        let maps = match (&calibration.walking_area, config.write_maps) {
            (Some(area), true) => {
                let template = MapGrid::covering(area, config.cell_size, config.max_cells)?;
                Some(MapState {
                    occupation: OccupationMap::new(&template),
                    area_template: template,
                    day: None,
                    latest: None,
                })
            }
            (None, true) => {
                warn!("no walking area in the calibration; maps are disabled");
                None
            }
            _ => None,
        };
        Ok(Self {
            camera_id: camera_id.clone(),
            params,
            min_confidence: config.min_confidence,
            cell_size: config.cell_size,
            max_cells: config.max_cells,
            map_every: config.map_every,
            output_dir: config.output_dir.clone(),
            risk: RiskState::new(config.window),
            alarms: AlarmMonitor::new(),
            store: config
                .write_logs
                .then(|| JsonlLogStore::new(config.output_dir.clone(), offset)),
            maps,
            offset,
            last_timestamp: None,
            summary: RunSummary {
                camera_id,
                capacity,
                ..Default::default()
            },
            calibration,
        })
    }

    pub fn params(&self) -> &RiskParams {
        &self.params
    }

    /// Processes one input item. Bad input lines and out-of-order timestamps
    /// degrade the frame instead of stopping the run; only storage failures
    /// are returned as errors.
    pub fn process(&mut self, item: Result<FrameDetections, IngestError>) -> Result<FrameRecord, PipelineError> {
        self.summary.frames += 1;
        let frame = match item {
            Ok(f) => f,
            Err(IngestError::Io(e)) => return Err(PipelineError::Storage(e.to_string())),
            Err(e) => {
                warn!("{e}");
                self.summary.degraded_frames += 1;
                return Ok(FrameRecord {
                    frame_id: None,
                    timestamp: None,
                    count: 0,
                    smoothed_count: self.risk.mean_count(),
                    global_risk: 0.0,
                    dynamic_risk: self.risk.dynamic_risk(),
                    infraction_pairs: 0,
                    links: vec![],
                    alarms: vec![],
                    dropped: DropCounts::default(),
                    error: Some(e.to_string()),
                    errors_total: self.summary.degraded_frames,
                });
            }
        };

        let mut error = None;
        if let Some(last) = self.last_timestamp {
            if frame.timestamp < last {
                let msg = format!("timestamp {} precedes the previous frame's {last}", frame.timestamp);
                warn!("frame {}: {msg}", frame.frame_id);
                error = Some(msg);
                self.summary.degraded_frames += 1;
            }
        }
        self.last_timestamp = Some(self.last_timestamp.map_or(frame.timestamp, |t| t.max(frame.timestamp)));

        let (snapshot, dropped) = to_snapshot(&frame, &self.calibration, self.min_confidence);
        self.summary.dropped.accumulate(&dropped);
        let g = global_risk(&self.params, &snapshot);
        let d = self.risk.update_dynamic_risk(g);
        let count = snapshot.len();
        let smoothed = self.risk.smoothed_count(count as u32);
        let alarms = self.alarms.check(&self.params, frame.timestamp, d, smoothed);
        self.summary.alarms += alarms.len();
        let infractions = count_infractions(&self.params, &snapshot);

        if let Some(store) = &mut self.store {
            store.append(&LogRecord {
                timestamp: frame.timestamp,
                camera_id: self.camera_id.clone(),
                positions: snapshot.positions.clone(),
                people_count: count as u32,
                global_risk: g,
                dynamic_risk: d,
                infraction_pairs: infractions as u32,
            })?;
        }

        if self.maps.is_some() {
            let day = self.local_date(frame.timestamp);
            let area = self.calibration.walking_area.clone().expect("maps need an area");
            let map = dynamic_risk_map(&self.params, &snapshot, &area, self.cell_size, self.max_cells)?;
            let state = self.maps.as_mut().expect("checked");
            if state.day.is_some() && state.day != day {
                self.flush_occupation()?;
            }
            let state = self.maps.as_mut().expect("checked");
            state.day = day;
            state.occupation.fold(&map)?;
            state.latest = Some(map);
            if self.map_every > 0 && self.summary.frames as u64 % self.map_every == 0 {
                self.write_maps()?;
            }
        }

        Ok(FrameRecord {
            frame_id: Some(frame.frame_id),
            timestamp: Some(frame.timestamp),
            count,
            smoothed_count: smoothed,
            global_risk: g,
            dynamic_risk: d,
            infraction_pairs: infractions,
            links: link_severities(&self.params, &snapshot),
            alarms,
            dropped,
            error,
            errors_total: self.summary.degraded_frames,
        })
    }

    fn local_date(&self, timestamp: f64) -> Option<NaiveDate> {
        JsonlLogStore::new("", self.offset).local_date(timestamp)
    }

    pub fn dynamic_map_path(&self, ext: &str) -> PathBuf {
        self.output_dir.join(format!("dynamic_{}.{ext}", self.camera_id))
    }

    fn write_maps(&mut self) -> Result<(), PipelineError> {
        let Some(state) = &self.maps else { return Ok(()) };
        if let Some(latest) = &state.latest {
            write_file(&self.dynamic_map_path("csv"), &latest.to_csv())?;
            write_file(&self.dynamic_map_path("pgm"), &latest.to_pgm())?;
        }
        self.write_occupation()
    }

    /// Writes the current day's running occupation map.
    fn write_occupation(&mut self) -> Result<(), PipelineError> {
        let Some(state) = &self.maps else { return Ok(()) };
        let Some(day) = state.day else { return Ok(()) };
        let store = JsonlLogStore::new(self.output_dir.clone(), self.offset);
        let csv = store.occupation_map_path(&self.camera_id, day, "csv");
        write_file(&csv, &state.occupation.mean.to_csv())?;
        write_file(&store.occupation_map_path(&self.camera_id, day, "pgm"), &state.occupation.mean.to_pgm())?;
        let name = csv.display().to_string();
        if !self.summary.occupation_maps.contains(&name) {
            self.summary.occupation_maps.push(name);
        }
        Ok(())
    }

    /// Closes the current day's occupation map and starts a new one.
    fn flush_occupation(&mut self) -> Result<(), PipelineError> {
        self.write_occupation()?;
        if let Some(state) = &mut self.maps {
            state.occupation = OccupationMap::new(&state.area_template);
            state.day = None;
        }
        Ok(())
    }

    /// Writes the final maps and the run summary.
    pub fn finish(mut self) -> Result<RunSummary, PipelineError> {
        self.write_maps()?;
        if self.store.is_some() || self.maps.is_some() {
            let path = self.output_dir.join(format!("run_summary_{}.json", self.camera_id));
            let text = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
            write_file(&path, &text)?;
        }
        Ok(self.summary)
    }
}
