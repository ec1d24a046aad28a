//! Detection ingest: JSON Lines frames in, ground-plane snapshots out.
//!
//! Each line of a detections file is one frame:
//!
//! ```json
//! {"frame_id":0,"timestamp":1700000000.0,"camera_id":"cam0",
//!  "detections":[{"bbox":[100,50,140,250],"confidence":0.9,"foot_point":[118,260]}]}
//! ```
//!
//! `foot_point` and `head_point` are optional; when a detector supplies an
//! occlusion-corrected foot point it takes precedence over the bottom-center
//! of the box. A line may carry `"version": 1`; other versions are refused.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::Calibration;
use crate::geometry::PixelPoint;
use crate::risk::SceneSnapshot;

pub const DETECTIONS_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.3;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: schema version {found} is not supported (expected {DETECTIONS_SCHEMA_VERSION})")]
    SchemaVersionMismatch { line: usize, found: u32 },
    #[error("cannot read detections: {0}")]
    Io(#[from] io::Error),
}

/// Axis-aligned detection box in pixels, serialized as `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, String> {
        if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) {
            return Err("bbox has a non-finite coordinate".into());
        }
        if !(x1 < x2 && y1 < y2) {
            return Err(format!("bbox [{x1}, {y1}, {x2}, {y2}] must satisfy x1 < x2 and y1 < y2"));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn bottom_center(&self) -> PixelPoint {
        PixelPoint::new((self.x1 + self.x2) / 2.0, self.y2)
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint::new((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = String;

    fn try_from([x1, y1, x2, y2]: [f64; 4]) -> Result<Self, String> {
        Self::new(x1, y1, x2, y2)
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foot_point: Option<PixelPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_point: Option<PixelPoint>,
}

impl Detection {
    pub fn new(bbox: BoundingBox, confidence: f64) -> Self {
        Self {
            bbox,
            confidence,
            foot_point: None,
            head_point: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDetections {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub frame_id: u64,
    pub timestamp: f64,
    pub camera_id: String,
    pub detections: Vec<Detection>,
}

/// Pixel where the person touches the ground: the supplied foot point, or
/// the bottom-center of the box.
pub fn ground_contact_pixel(d: &Detection) -> PixelPoint {
    d.foot_point.unwrap_or_else(|| d.bbox.bottom_center())
}

/// Why detections were left out of a snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub low_confidence: usize,
    pub outside_walking_area: usize,
    pub point_at_infinity: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.low_confidence + self.outside_walking_area + self.point_at_infinity
    }

    pub fn accumulate(&mut self, other: &DropCounts) {
        self.low_confidence += other.low_confidence;
        self.outside_walking_area += other.outside_walking_area;
        self.point_at_infinity += other.point_at_infinity;
    }
}

/// Projects the confident detections of a frame onto the ground plane and
/// keeps those inside the walking area, in input order.
///
/// Per-detection failures are counted, never fatal.
pub fn to_snapshot(frame: &FrameDetections, cal: &Calibration, min_confidence: f64) -> (SceneSnapshot, DropCounts) {
    let mut drops = DropCounts::default();
    let mut positions = Vec::with_capacity(frame.detections.len());
    for d in &frame.detections {
        if !(d.confidence >= min_confidence) {
            drops.low_confidence += 1;
            continue;
        }
        match cal.image_to_ground_point(ground_contact_pixel(d)) {
            Ok(g) if cal.in_walking_area(g) => positions.push(g),
            Ok(_) => drops.outside_walking_area += 1,
            Err(e) => {
                warn!("frame {}: dropping detection: {e}", frame.frame_id);
                drops.point_at_infinity += 1;
            }
        }
    }
    (SceneSnapshot::new(frame.timestamp, positions), drops)
}

fn validate(frame: &FrameDetections, line: usize) -> Result<(), IngestError> {
    if let Some(found) = frame.version {
        if found != DETECTIONS_SCHEMA_VERSION {
            return Err(IngestError::SchemaVersionMismatch { line, found });
        }
    }
    if !frame.timestamp.is_finite() {
        return Err(IngestError::Parse {
            line,
            message: "timestamp is not finite".into(),
        });
    }
    for (k, d) in frame.detections.iter().enumerate() {
        if !(0.0..=1.0).contains(&d.confidence) {
            return Err(IngestError::Parse {
                line,
                message: format!("detection {k}: confidence {} outside [0, 1]", d.confidence),
            });
        }
        for p in [d.foot_point, d.head_point].into_iter().flatten() {
            if !p.is_finite() {
                return Err(IngestError::Parse {
                    line,
                    message: format!("detection {k}: non-finite keypoint"),
                });
            }
        }
        if let Some(foot) = d.foot_point {
            if foot.v < d.bbox.center().v {
                warn!(
                    "line {line}, detection {k}: foot point lies in the upper half of its box"
                );
            }
        }
    }
    Ok(())
}

/// Parses one JSONL line; `line` is 1-based and only used for diagnostics.
pub fn parse_frame_line(text: &str, line: usize) -> Result<FrameDetections, IngestError> {
    let frame: FrameDetections = serde_json::from_str(text).map_err(|e| IngestError::Parse {
        line,
        message: e.to_string(),
    })?;
    validate(&frame, line)?;
    Ok(frame)
}

/// Sequential reader over a detections JSONL stream. Blank lines are skipped.
pub struct DetectionReader<R> {
    lines: io::Lines<R>,
    line: usize,
}

impl<R: BufRead> DetectionReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line: 0,
        }
    }

    /// 1-based number of the last line read.
    pub fn line_number(&self) -> usize {
        self.line
    }
}

impl<R: BufRead> Iterator for DetectionReader<R> {
    type Item = Result<FrameDetections, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            return Some(parse_frame_line(&text, self.line));
        }
    }
}

/// Opens a detections file, or stdin when `path` is `-`.
pub fn read_detections(path: impl AsRef<Path>) -> Result<DetectionReader<Box<dyn BufRead>>, IngestError> {
    let path = path.as_ref();
    let reader: Box<dyn BufRead> = if path == Path::new("-") {
        Box::new(BufReader::new(io::stdin()))
    } else {
        Box::new(BufReader::new(File::open(path)?))
    };
    Ok(DetectionReader::new(reader))
}
