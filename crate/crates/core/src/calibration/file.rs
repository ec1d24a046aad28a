use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Calibration, CalibrationError, MarkerGrid, WalkingArea, GRID_SIDE, MARKER_COUNT};
use crate::geometry::{GroundPoint, Homography, PixelPoint};

pub const CALIBRATION_FILE_VERSION: u32 = 1;
pub const MARKER_ORDER_ROW_MAJOR: &str = "row-major";
pub const BOUNDARY_INCLUSIVE: &str = "inclusive";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_x_m: f64,
    pub spacing_y_m: f64,
    pub origin_m: GroundPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub marker_order: String,
    pub boundary: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            marker_order: MARKER_ORDER_ROW_MAJOR.into(),
            boundary: BOUNDARY_INCLUSIVE.into(),
        }
    }
}

/// On-disk calibration document. Field names are part of the file contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub version: u32,
    pub camera_id: String,
    pub created_at: DateTime<Utc>,
    pub grid: GridSpec,
    pub clicked_pixels: Vec<PixelPoint>,
    #[serde(rename = "H_ground_to_image")]
    pub h_ground_to_image: [f64; 9],
    #[serde(rename = "H_image_to_ground")]
    pub h_image_to_ground: [f64; 9],
    pub rms_backprojection_px: f64,
    #[serde(default)]
    pub walking_area_ground_m: Vec<GroundPoint>,
    pub conventions: Conventions,
}

impl From<&Calibration> for CalibrationFile {
    fn from(c: &Calibration) -> Self {
        Self {
            version: CALIBRATION_FILE_VERSION,
            camera_id: c.camera_id.clone(),
            created_at: c.created_at,
            grid: GridSpec {
                rows: GRID_SIDE,
                cols: GRID_SIDE,
                spacing_x_m: c.grid.spacing_x,
                spacing_y_m: c.grid.spacing_y,
                origin_m: c.grid.origin,
            },
            clicked_pixels: c.clicked_pixels.clone(),
            h_ground_to_image: c.ground_to_image.to_row_major(),
            h_image_to_ground: c.image_to_ground.to_row_major(),
            rms_backprojection_px: c.rms_backprojection_px,
            walking_area_ground_m: c
                .walking_area
                .as_ref()
                .map(|a| a.vertices().to_vec())
                .unwrap_or_default(),
            conventions: Conventions::default(),
        }
    }
}

impl TryFrom<CalibrationFile> for Calibration {
    type Error = CalibrationError;

    fn try_from(f: CalibrationFile) -> Result<Self, Self::Error> {
        if f.version != CALIBRATION_FILE_VERSION {
            return Err(CalibrationError::UnsupportedFile(format!(
                "version {} (expected {CALIBRATION_FILE_VERSION})",
                f.version
            )));
        }
        if f.conventions.marker_order != MARKER_ORDER_ROW_MAJOR {
            return Err(CalibrationError::UnsupportedFile(format!(
                "marker order {:?}",
                f.conventions.marker_order
            )));
        }
        if f.conventions.boundary != BOUNDARY_INCLUSIVE {
            return Err(CalibrationError::UnsupportedFile(format!(
                "boundary convention {:?}",
                f.conventions.boundary
            )));
        }
        if f.grid.rows != GRID_SIDE || f.grid.cols != GRID_SIDE {
            return Err(CalibrationError::InvalidGrid(format!(
                "only {GRID_SIDE}×{GRID_SIDE} grids are supported, got {}×{}",
                f.grid.rows, f.grid.cols
            )));
        }
        if f.clicked_pixels.len() != MARKER_COUNT {
            return Err(CalibrationError::WrongPointCount {
                expected: MARKER_COUNT,
                got: f.clicked_pixels.len(),
            });
        }
        if !(f.rms_backprojection_px >= 0.0) {
            return Err(CalibrationError::UnsupportedFile(
                "rms_backprojection_px must be non-negative".into(),
            ));
        }
        let grid = MarkerGrid::new(f.grid.spacing_x_m, f.grid.spacing_y_m, f.grid.origin_m)?;
        let walking_area = if f.walking_area_ground_m.is_empty() {
            None
        } else {
            Some(WalkingArea::new(f.walking_area_ground_m)?)
        };
        let calibration = Calibration {
            camera_id: f.camera_id,
            created_at: f.created_at,
            grid,
            clicked_pixels: f.clicked_pixels,
            ground_to_image: Homography::from_row_major(f.h_ground_to_image)?,
            image_to_ground: Homography::from_row_major(f.h_image_to_ground)?,
            rms_backprojection_px: f.rms_backprojection_px,
            walking_area,
        };
        calibration.check_inverse_consistency()?;
        Ok(calibration)
    }
}

impl Calibration {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CalibrationFile::from(self)).expect("calibration serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CalibrationError> {
        let file: CalibrationFile =
            serde_json::from_str(s).map_err(|e| CalibrationError::Parse(e.to_string()))?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CalibrationError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| CalibrationError::Storage(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CalibrationError> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n")
            .map_err(|e| CalibrationError::Storage(format!("{}: {e}", path.display())))
    }
}
