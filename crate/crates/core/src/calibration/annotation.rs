use serde::{Deserialize, Serialize};

use super::file::MARKER_ORDER_ROW_MAJOR;
use super::{CalibrationError, GRID_SIDE};
use crate::geometry::{GroundPoint, PixelPoint};

pub const ANNOTATION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageInfo {
    pub width: u32,
    pub height: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationGrid {
    pub rows: usize,
    pub cols: usize,
    pub spacing_x_m: f64,
    pub spacing_y_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_m: Option<GroundPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationConventions {
    pub marker_order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
}

/// The document exported by the browser annotation tool: the nine clicked
/// marker centers and an optional walking-area polygon, both in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub version: u32,
    pub image: ImageInfo,
    pub grid: AnnotationGrid,
    pub clicked_pixels: Vec<PixelPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walking_area_pixels: Option<Vec<PixelPoint>>,
    pub conventions: AnnotationConventions,
}

impl Annotation {
    fn check(&self) -> Result<(), CalibrationError> {
        if self.version != ANNOTATION_VERSION {
            return Err(CalibrationError::UnsupportedFile(format!(
                "annotation version {} (expected {ANNOTATION_VERSION})",
                self.version
            )));
        }
        if self.conventions.marker_order != MARKER_ORDER_ROW_MAJOR {
            return Err(CalibrationError::UnsupportedFile(format!(
                "marker order {:?} (expected {MARKER_ORDER_ROW_MAJOR:?})",
                self.conventions.marker_order
            )));
        }
        if self.grid.rows != GRID_SIDE || self.grid.cols != GRID_SIDE {
            return Err(CalibrationError::InvalidGrid(format!(
                "{}×{} grid; only 3×3 is supported",
                self.grid.rows, self.grid.cols
            )));
        }
        Ok(())
    }
}

/// Marker clicks as read from any supported points input.
#[derive(Debug, Clone, PartialEq)]
pub struct PointsInput {
    pub clicked_pixels: Vec<PixelPoint>,
    pub walking_area_pixels: Option<Vec<PixelPoint>>,
    /// Grid spacing `(x, y)` and origin, when the input carries them.
    pub grid: Option<(f64, f64, GroundPoint)>,
}

/// Reads marker clicks from an annotation document, a bare JSON array of
/// `[u, v]` pairs, or plain text with one `u v` (or `u,v`) pair per line.
pub fn parse_points_input(text: &str) -> Result<PointsInput, CalibrationError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let a: Annotation = serde_json::from_str(text).map_err(|e| CalibrationError::Parse(e.to_string()))?;
        a.check()?;
        return Ok(PointsInput {
            clicked_pixels: a.clicked_pixels,
            walking_area_pixels: a.walking_area_pixels.filter(|w| !w.is_empty()),
            grid: Some((
                a.grid.spacing_x_m,
                a.grid.spacing_y_m,
                a.grid.origin_m.unwrap_or(GroundPoint::new(0.0, 0.0)),
            )),
        });
    }
    let clicked_pixels = if trimmed.starts_with('[') {
        serde_json::from_str(text).map_err(|e| CalibrationError::Parse(e.to_string()))?
    } else {
        let mut pts = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parsed: Vec<f64> = nums
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CalibrationError::Parse(format!("line {}: {e}", k + 1)))?;
            if parsed.len() != 2 {
                return Err(CalibrationError::Parse(format!(
                    "line {}: expected two numbers, got {}",
                    k + 1,
                    parsed.len()
                )));
            }
            pts.push(PixelPoint::new(parsed[0], parsed[1]));
        }
        pts
    };
    Ok(PointsInput {
        clicked_pixels,
        walking_area_pixels: None,
        grid: None,
    })
}
