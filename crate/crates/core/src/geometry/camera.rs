use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Homography, PixelPoint, Result};

const ORTHONORMAL_TOLERANCE: f64 = 1e-9;
const MIN_DEPTH: f64 = 1e-9;

/// Pinhole camera: intrinsics plus a world → camera rigid motion.
///
/// The JSON form is `{fx, fy, cx, cy, R[9] (row-major), t[3]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraFile", into = "CameraFile")]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraFile {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    #[serde(rename = "R")]
    r: [f64; 9],
    t: [f64; 3],
}

impl TryFrom<CameraFile> for CameraModel {
    type Error = GeometryError;

    fn try_from(f: CameraFile) -> Result<Self> {
        Self::new(
            f.fx,
            f.fy,
            f.cx,
            f.cy,
            Matrix3::from_row_slice(&f.r),
            Vector3::from_column_slice(&f.t),
        )
    }
}

impl From<CameraModel> for CameraFile {
    fn from(c: CameraModel) -> Self {
        let mut r = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                r[i * 3 + j] = c.rotation[(i, j)];
            }
        }
        CameraFile {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            r,
            t: [c.translation.x, c.translation.y, c.translation.z],
        }
    }
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidCamera(format!(
                "focal lengths must be positive (fx = {fx}, fy = {fy})"
            )));
        }
        if ![cx, cy].iter().all(|v| v.is_finite())
            || rotation.iter().chain(translation.iter()).any(|v| !v.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        let gram_error = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if gram_error > ORTHONORMAL_TOLERANCE {
            return Err(GeometryError::InvalidCamera(format!(
                "rotation is not orthonormal (|RᵀR - I| = {gram_error:e})"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
        })
    }

    /// Camera at the world origin looking down +z.
    pub fn with_identity_pose(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        Self::new(fx, fy, cx, cy, Matrix3::identity(), Vector3::zeros())
    }

    pub fn intrinsics(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn to_camera_frame(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * world + self.translation
    }

    /// Optical center in world coordinates, `-Rᵀt`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Projects a world point to pixels.
    pub fn project(&self, world: &Vector3<f64>) -> Result<PixelPoint> {
        let p = self.to_camera_frame(world);
        if p.z <= MIN_DEPTH {
            return Err(GeometryError::BehindCamera(p.z));
        }
        Ok(PixelPoint::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    /// Homography of the world plane `Z = 0` into the image, `K·[r₁ r₂ t]`.
    pub fn ground_plane_homography(&self) -> Result<Homography> {
        let mut m = Matrix3::zeros();
        m.set_column(0, &self.rotation.column(0));
        m.set_column(1, &self.rotation.column(1));
        m.set_column(2, &self.translation);
        Homography::from_matrix(self.intrinsics() * m)
    }
}
