//! Scene calibration from a nine-marker ground grid.
//!
//! An operator lays a 3×3 grid of markers with known spacing on the floor and
//! clicks their centers on a camera snapshot, top-left first in row-major
//! order. [`calibrate`] pairs the clicks with the grid lattice, fits the
//! ground → image homography robustly and stores both directions. An optional
//! walking-area polygon, drawn in pixels, restricts which ground positions are
//! monitored.

mod annotation;
mod file;
mod polygon;

pub use annotation::{
    parse_points_input, Annotation, AnnotationConventions, AnnotationGrid, ImageInfo, PointsInput, ANNOTATION_VERSION,
};
pub use file::{CalibrationFile, Conventions, GridSpec, CALIBRATION_FILE_VERSION};
pub use polygon::WalkingArea;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::geometry::{
    backprojection_error, estimate_homography_ransac, refine_homography_lm, Correspondence,
    GeometryError, GroundPoint, Homography, LmParams, PixelPoint, RansacParams,
};

/// Markers per grid side.
pub const GRID_SIDE: usize = 3;
/// Number of clicked markers a calibration needs.
pub const MARKER_COUNT: usize = GRID_SIDE * GRID_SIDE;
/// Default ceiling on the RMS reprojection residual of a calibration.
pub const DEFAULT_MAX_RMS_PX: f64 = 5.0;
/// Tolerance (meters) for the two stored homographies to be mutual inverses.
pub const INVERSE_CONSISTENCY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("invalid marker grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} marker points, got {got}")]
    WrongPointCount { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("calibration rejected: RMS reprojection {rms:.3} px exceeds {ceiling} px (were the markers clicked in row-major order?)")]
    CalibrationRejected { rms: f64, ceiling: f64 },
    #[error("walking area polygon is self-intersecting")]
    SelfIntersectingPolygon,
    #[error("invalid walking area polygon: {0}")]
    InvalidPolygon(String),
    #[error("stored homographies are not mutual inverses (max deviation {0:e} m)")]
    InconsistentHomographies(f64),
    #[error("unsupported calibration file: {0}")]
    UnsupportedFile(String),
    #[error("cannot read or write calibration: {0}")]
    Storage(String),
    #[error("malformed calibration JSON: {0}")]
    Parse(String),
}

/// The 3×3 marker carpet: spacing between adjacent markers and the ground
/// position of marker (0, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerGrid {
    pub spacing_x: f64,
    pub spacing_y: f64,
    pub origin: GroundPoint,
}

impl MarkerGrid {
    pub fn new(spacing_x: f64, spacing_y: f64, origin: GroundPoint) -> Result<Self, CalibrationError> {
        if !(spacing_x > 0.0 && spacing_y > 0.0) || !spacing_x.is_finite() || !spacing_y.is_finite() {
            return Err(CalibrationError::InvalidGrid(format!(
                "spacing must be positive and finite, got {spacing_x} × {spacing_y}"
            )));
        }
        if !origin.is_finite() {
            return Err(CalibrationError::InvalidGrid("non-finite origin".into()));
        }
        Ok(Self {
            spacing_x,
            spacing_y,
            origin,
        })
    }

    pub fn square(spacing: f64) -> Result<Self, CalibrationError> {
        Self::new(spacing, spacing, GroundPoint::new(0.0, 0.0))
    }

    /// Marker positions, row-major: `origin + (j·spacing_x, i·spacing_y)`.
    pub fn ground_points(&self) -> Vec<GroundPoint> {
        grid_ground_points(self)
    }
}

pub fn grid_ground_points(grid: &MarkerGrid) -> Vec<GroundPoint> {
    (0..GRID_SIDE)
        .flat_map(|i| {
            (0..GRID_SIDE).map(move |j| {
                GroundPoint::new(
                    grid.origin.x + j as f64 * grid.spacing_x,
                    grid.origin.y + i as f64 * grid.spacing_y,
                )
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub camera_id: String,
    pub ransac: RansacParams,
    pub lm: LmParams,
    pub max_rms_px: f64,
    /// Creation time to record; `None` stamps the current time.
    pub created_at: Option<DateTime<Utc>>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            camera_id: "cam0".into(),
            ransac: RansacParams::default(),
            lm: LmParams::default(),
            max_rms_px: DEFAULT_MAX_RMS_PX,
            created_at: None,
        }
    }
}

/// A fitted scene calibration. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub camera_id: String,
    pub created_at: DateTime<Utc>,
    pub grid: MarkerGrid,
    pub clicked_pixels: Vec<PixelPoint>,
    pub ground_to_image: Homography,
    pub image_to_ground: Homography,
    pub rms_backprojection_px: f64,
    pub walking_area: Option<WalkingArea>,
}

/// Fits the calibration for nine clicked marker centers (row-major order).
///
/// RANSAC picks the inliers, Levenberg-Marquardt refines on them, and the RMS
/// residual over all nine markers must stay under `options.max_rms_px`.
pub fn calibrate(
    grid: &MarkerGrid,
    clicked_pixels: &[PixelPoint],
    options: &CalibrationOptions,
) -> Result<Calibration, CalibrationError> {
    if clicked_pixels.len() != MARKER_COUNT {
        return Err(CalibrationError::WrongPointCount {
            expected: MARKER_COUNT,
            got: clicked_pixels.len(),
        });
    }
    if clicked_pixels.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite.into());
    }
    let correspondences: Vec<Correspondence> = clicked_pixels
        .iter()
        .zip(grid.ground_points())
        .map(|(&image, ground)| Correspondence::new(image, ground))
        .collect();

    let fit = estimate_homography_ransac(&correspondences, &options.ransac)?;
    let inliers = fit.inlier_correspondences(&correspondences);
    let ground_to_image = refine_homography_lm(&fit.homography, &inliers, &options.lm)?;
    let image_to_ground = ground_to_image.invert()?;

    let error = backprojection_error(&ground_to_image, &correspondences)?;
    let rms = (error / correspondences.len() as f64).sqrt();
    if !(rms <= options.max_rms_px) {
        return Err(CalibrationError::CalibrationRejected {
            rms,
            ceiling: options.max_rms_px,
        });
    }

    let calibration = Calibration {
        camera_id: options.camera_id.clone(),
        created_at: options.created_at.unwrap_or_else(Utc::now),
        grid: *grid,
        clicked_pixels: clicked_pixels.to_vec(),
        ground_to_image,
        image_to_ground,
        rms_backprojection_px: rms,
        walking_area: None,
    };
    calibration.check_inverse_consistency()?;
    Ok(calibration)
}

impl Calibration {
    /// Calibration whose image and ground coordinates coincide numerically.
    pub fn identity(camera_id: impl Into<String>) -> Self {
        Self::from_homography(camera_id, Homography::identity()).expect("identity is invertible")
    }

    /// Builds a calibration from a known ground → image homography, without
    /// clicked markers. Used for synthetic scenes and tests.
    pub fn from_homography(
        camera_id: impl Into<String>,
        ground_to_image: Homography,
    ) -> Result<Self, CalibrationError> {
        let grid = MarkerGrid::square(1.0)?;
        let clicked_pixels = grid
            .ground_points()
            .into_iter()
            .map(|g| ground_to_image.project(g))
            .collect::<Result<Vec<_>, _>>()?;
        let calibration = Self {
            camera_id: camera_id.into(),
            created_at: DateTime::<Utc>::UNIX_EPOCH,
            grid,
            clicked_pixels,
            ground_to_image,
            image_to_ground: ground_to_image.invert()?,
            rms_backprojection_px: 0.0,
            walking_area: None,
        };
        calibration.check_inverse_consistency()?;
        Ok(calibration)
    }

    /// Converts a pixel polygon to the ground plane and stores it as the
    /// walking area.
    pub fn set_walking_area(&self, pixel_polygon: &[PixelPoint]) -> Result<Calibration, CalibrationError> {
        if pixel_polygon.len() < 3 {
            return Err(CalibrationError::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                pixel_polygon.len()
            )));
        }
        let ground = pixel_polygon
            .iter()
            .map(|&p| self.image_to_ground.unproject(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.clone().with_walking_area(Some(WalkingArea::new(ground)?)))
    }

    pub fn with_walking_area(mut self, area: Option<WalkingArea>) -> Calibration {
        self.walking_area = area;
        self
    }

    /// True when `p` lies inside the walking area (boundary included), or
    /// when no walking area is configured.
    pub fn in_walking_area(&self, p: GroundPoint) -> bool {
        self.walking_area.as_ref().is_none_or(|a| a.contains(p))
    }

    pub fn image_to_ground_point(&self, p: PixelPoint) -> Result<GroundPoint, GeometryError> {
        self.image_to_ground.unproject(p)
    }

    pub fn ground_to_image_point(&self, p: GroundPoint) -> Result<PixelPoint, GeometryError> {
        self.ground_to_image.project(p)
    }

    /// Largest round-trip deviation of the marker points through both
    /// homographies.
    pub fn inverse_deviation(&self) -> Result<f64, GeometryError> {
        let mut worst: f64 = 0.0;
        for g in self.grid.ground_points() {
            let back = self.image_to_ground.unproject(self.ground_to_image.project(g)?)?;
            worst = worst.max(back.distance(&g));
        }
        Ok(worst)
    }

    fn check_inverse_consistency(&self) -> Result<(), CalibrationError> {
        let dev = self.inverse_deviation()?;
        let scale = self
            .grid
            .ground_points()
            .iter()
            .fold(1.0_f64, |m, g| m.max(g.x.abs()).max(g.y.abs()));
        if !(dev <= INVERSE_CONSISTENCY_TOLERANCE * scale) {
            return Err(CalibrationError::InconsistentHomographies(dev));
        }
        Ok(())
    }
}
