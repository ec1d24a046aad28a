//! Scoring ground-plane detections against 3D foot annotations.
//!
//! Annotated feet are given in the camera model's world frame. A plane is
//! fitted to all of them and every position, annotated or predicted, is
//! compared in that plane's 2D frame (see [`PlaneFrame`]).

mod kmeans;
mod matching;
mod metrics;
mod plane;

pub use kmeans::{kmeans, kmeans9, KMEANS_MAX_ITERS, KMEANS_TOLERANCE};
pub use matching::{match_frame, MatchResult, MatchedPair};
pub use metrics::{
    apply_range_filter, compute_metrics, Counts, MetricCell, MetricsTable, Scores, DEFAULT_RANGES, DEFAULT_STRIDE,
    DEFAULT_THRESHOLDS,
};
pub use plane::{fit_plane, plane_coordinates, Plane, PlaneFrame};

use std::io::BufRead;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    estimate_homography_ransac, refine_homography_lm, CameraModel, Correspondence, GeometryError, GroundPoint,
    Homography, LmParams, PixelPoint, RansacParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("points are collinear or too few to define a plane")]
    DegeneratePoints,
    #[error("need at least {needed} distinct points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("cluster center {index} at {center:?} projects behind the camera (depth {depth})")]
    CenterBehindCamera { index: usize, center: [f64; 3], depth: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("frame {frame_id}: non-finite coordinate")]
    NonFinite { frame_id: u64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// One annotated frame as read from the evaluation JSONL input.
///
/// Predictions are given either directly in the evaluation plane frame
/// (`predicted_ground`) or as image points (`predicted_pixels`) that are
/// mapped through the evaluation homography; both may be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalFrame {
    pub frame_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<String>,
    pub gt_feet_3d: Vec<[f64; 3]>,
    #[serde(default)]
    pub predicted_ground: Vec<GroundPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_pixels: Option<Vec<PixelPoint>>,
}

impl EvalFrame {
    fn check(&self) -> Result<(), EvaluationError> {
        let finite = self.gt_feet_3d.iter().flatten().all(|v| v.is_finite())
            && self.predicted_ground.iter().all(GroundPoint::is_finite)
            && self.predicted_pixels.iter().flatten().all(PixelPoint::is_finite);
        if finite {
            Ok(())
        } else {
            Err(EvaluationError::NonFinite { frame_id: self.frame_id })
        }
    }
}

/// A position in the evaluation plane frame and its range from the camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangedPoint {
    pub position: GroundPoint,
    pub range: f64,
}

/// A frame with everything expressed in the evaluation plane frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundFrame {
    pub frame_id: u64,
    pub sequence: Option<String>,
    pub gt: Vec<RangedPoint>,
    pub pred: Vec<RangedPoint>,
}

/// The ground plane recovered from annotations, plus, when requested, the
/// nine cluster correspondences and the image → plane homography fitted to
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGeometry {
    pub camera: CameraModel,
    pub frame: PlaneFrame,
    pub correspondences: Vec<Correspondence>,
    pub image_to_ground: Option<Homography>,
}

fn all_feet(frames: &[EvalFrame]) -> Vec<Vector3<f64>> {
    frames
        .iter()
        .flat_map(|f| f.gt_feet_3d.iter().map(|p| Vector3::from(*p)))
        .collect()
}

/// Fits the ground plane to every annotated foot.
pub fn fit_ground_frame(frames: &[EvalFrame], camera: &CameraModel) -> Result<PlaneFrame, EvaluationError> {
    let plane = fit_plane(&all_feet(frames))?;
    Ok(PlaneFrame::new(&plane, camera))
}

/// Clusters the annotated feet into nine centers on the fitted plane and pairs
/// each center's pinhole projection with its plane coordinates.
pub fn build_eval_correspondences(
    frames: &[EvalFrame],
    camera: &CameraModel,
    seed: u64,
) -> Result<(PlaneFrame, Vec<Correspondence>), EvaluationError> {
    let frame = fit_ground_frame(frames, camera)?;
    let ground = plane_coordinates(&frame, &all_feet(frames));
    let centers = kmeans9(&ground, seed)?;
    let mut out = Vec::with_capacity(centers.len());
    for (index, c) in centers.into_iter().enumerate() {
        let world = frame.lift(c);
        let pixel = camera.project(&world).map_err(|e| match e {
            GeometryError::BehindCamera(depth) => EvaluationError::CenterBehindCamera {
                index,
                center: [world.x, world.y, world.z],
                depth,
            },
            other => other.into(),
        })?;
        out.push(Correspondence::new(pixel, c));
    }
    Ok((frame, out))
}

/// Plane → image homography fitted to the correspondences by RANSAC and LM.
pub fn fit_eval_homography(correspondences: &[Correspondence], seed: u64) -> Result<Homography, EvaluationError> {
    let fit = estimate_homography_ransac(correspondences, &RansacParams { seed, ..Default::default() })?;
    let inliers = fit.inlier_correspondences(correspondences);
    Ok(refine_homography_lm(&fit.homography, &inliers, &LmParams::default())?)
}

impl EvalGeometry {
    /// Recovers the evaluation geometry. The homography is only fitted when
    /// some frame carries image-space predictions.
    pub fn build(frames: &[EvalFrame], camera: &CameraModel, seed: u64) -> Result<Self, EvaluationError> {
        for f in frames {
            f.check()?;
        }
        if frames.iter().any(|f| f.predicted_pixels.is_some()) {
            let (frame, correspondences) = build_eval_correspondences(frames, camera, seed)?;
            let h = fit_eval_homography(&correspondences, seed)?.invert()?;
            Ok(Self {
                camera: camera.clone(),
                frame,
                correspondences,
                image_to_ground: Some(h),
            })
        } else {
            Ok(Self {
                camera: camera.clone(),
                frame: fit_ground_frame(frames, camera)?,
                correspondences: Vec::new(),
                image_to_ground: None,
            })
        }
    }

    /// Expresses a frame in the plane frame. Ground truth is ranged by its 3D
    /// distance to the camera center, predictions by their distance to the
    /// camera's foot (the plane frame's origin). Image predictions that map to
    /// infinity are dropped and counted.
    pub fn ground_frame(&self, f: &EvalFrame) -> (GroundFrame, usize) {
        let center = self.camera.center();
        let gt = f
            .gt_feet_3d
            .iter()
            .map(|p| {
                let p = Vector3::from(*p);
                RangedPoint {
                    position: self.frame.to_plane(&p),
                    range: (p - center).norm(),
                }
            })
            .collect();
        let ranged = |g: GroundPoint| RangedPoint {
            position: g,
            range: (g.x * g.x + g.y * g.y).sqrt(),
        };
        let mut pred: Vec<RangedPoint> = f.predicted_ground.iter().map(|&g| ranged(g)).collect();
        let mut dropped = 0;
        if let (Some(pixels), Some(h)) = (&f.predicted_pixels, &self.image_to_ground) {
            for &px in pixels {
                match h.unproject(px) {
                    Ok(g) => pred.push(ranged(g)),
                    Err(_) => dropped += 1,
                }
            }
        }
        (
            GroundFrame {
                frame_id: f.frame_id,
                sequence: f.sequence.clone(),
                gt,
                pred,
            },
            dropped,
        )
    }
}

/// Reads evaluation frames, one JSON object per non-blank line.
pub fn read_eval_frames(reader: impl BufRead) -> Result<Vec<EvalFrame>, EvaluationError> {
    let mut frames = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvaluationError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: EvalFrame = serde_json::from_str(&line).map_err(|e| EvaluationError::Parse {
            line: k + 1,
            message: e.to_string(),
        })?;
        frames.push(frame);
    }
    Ok(frames)
}
