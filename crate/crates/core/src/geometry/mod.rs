//! Planar projective geometry.
//!
//! Everything the pipeline needs to move between the image plane (pixels) and
//! the ground plane (meters): homography estimation by normalized DLT, robust
//! estimation with RANSAC, Levenberg-Marquardt refinement of the
//! back-projection error, and the pinhole camera used by the evaluation
//! harness.
//!
//! All functions here are pure. RANSAC takes an explicit seed.

mod camera;
mod dlt;
mod homography;
mod lm;
mod point;
mod ransac;

pub use camera::CameraModel;
pub use dlt::estimate_homography_dlt;
pub use homography::{backprojection_error, Homography};
pub use lm::{refine_homography_lm, LmParams};
pub use point::{Correspondence, GroundPoint, PixelPoint};
pub use ransac::{estimate_homography_ransac, RansacFit, RansacParams};

use thiserror::Error;

/// Homogeneous denominators below this magnitude are treated as zero.
pub const POINT_AT_INFINITY_EPS: f64 = 1e-12;

/// Smallest determinant magnitude accepted for a normalized homography.
pub const DETERMINANT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("need at least {needed} correspondences, got {got}")]
    TooFewCorrespondences { needed: usize, got: usize },
    #[error("degenerate point configuration (collinear or duplicate points)")]
    DegenerateConfiguration,
    #[error("homography cannot be normalized: |h33| = {0:e}")]
    NotNormalizable(f64),
    #[error("point maps to infinity (homogeneous denominator {0:e})")]
    PointAtInfinity(f64),
    #[error("no consensus: best model has only {inliers} inliers")]
    NoConsensus { inliers: usize },
    #[error("damped normal equations are singular")]
    SingularNormalEquations,
    #[error("matrix is singular or ill-conditioned (|det| = {0:e})")]
    SingularMatrix(f64),
    #[error("point is behind the camera (depth {0:e})")]
    BehindCamera(f64),
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("non-finite coordinate in input")]
    NonFinite,
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
