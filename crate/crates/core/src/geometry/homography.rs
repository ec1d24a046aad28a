use nalgebra::Matrix3;

use super::{
    Correspondence, GeometryError, GroundPoint, PixelPoint, Result, DETERMINANT_FLOOR,
    POINT_AT_INFINITY_EPS,
};

/// A normalized planar homography (`h33 == 1`).
///
/// By convention a calibration stores one homography per direction; this type
/// itself carries no direction, [`Homography::apply`] maps whatever plane it
/// was estimated from onto the other one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// Normalizes `m` so that `h33 = 1` and checks the determinant floor.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let h33 = m[(2, 2)];
        if h33.abs() < POINT_AT_INFINITY_EPS {
            return Err(GeometryError::NotNormalizable(h33));
        }
        let m = m / h33;
        let det = m.determinant();
        if !(det.abs() >= DETERMINANT_FLOOR) {
            return Err(GeometryError::SingularMatrix(det));
        }
        Ok(Self { m })
    }

    /// Builds a homography from nine row-major entries `h11 … h33`.
    pub fn from_row_major(h: [f64; 9]) -> Result<Self> {
        Self::from_matrix(Matrix3::from_row_slice(&h))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = self.m[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Applies the projective map to `(x, y)`, dividing by the third
    /// homogeneous coordinate.
    pub fn apply(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let h = &self.m;
        let w = h[(2, 0)] * x + h[(2, 1)] * y + h[(2, 2)];
        if w.abs() < POINT_AT_INFINITY_EPS {
            return Err(GeometryError::PointAtInfinity(w));
        }
        let px = (h[(0, 0)] * x + h[(0, 1)] * y + h[(0, 2)]) / w;
        let py = (h[(1, 0)] * x + h[(1, 1)] * y + h[(1, 2)]) / w;
        Ok((px, py))
    }

    /// Ground → image application.
    pub fn project(&self, p: GroundPoint) -> Result<PixelPoint> {
        self.apply(p.x, p.y).map(|(u, v)| PixelPoint::new(u, v))
    }

    /// Image → ground application.
    pub fn unproject(&self, p: PixelPoint) -> Result<GroundPoint> {
        self.apply(p.u, p.v).map(|(x, y)| GroundPoint::new(x, y))
    }

    pub fn invert(&self) -> Result<Self> {
        let det = self.m.determinant();
        if !(det.abs() >= DETERMINANT_FLOOR) {
            return Err(GeometryError::SingularMatrix(det));
        }
        let inv = self
            .m
            .try_inverse()
            .ok_or(GeometryError::SingularMatrix(det))?;
        Self::from_matrix(inv)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Homography) -> Result<Self> {
        Self::from_matrix(self.m * other.m)
    }
}

impl Default for Homography {
    fn default() -> Self {
        Self::identity()
    }
}

/// Sum over correspondences of the squared pixel residuals between the
/// observed image point and the projection of its ground point.
pub fn backprojection_error(h: &Homography, correspondences: &[Correspondence]) -> Result<f64> {
    let m = h.matrix();
    let mut total = 0.0;
    for c in correspondences {
        let (x, y) = (c.ground.x, c.ground.y);
        let w = m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)];
        if w.abs() < POINT_AT_INFINITY_EPS {
            return Err(GeometryError::PointAtInfinity(w));
        }
        let du = c.image.u - (m[(0, 0)] * x + m[(0, 1)] * y + m[(0, 2)]) / w;
        let dv = c.image.v - (m[(1, 0)] * x + m[(1, 1)] * y + m[(1, 2)]) / w;
        total += du * du + dv * dv;
    }
    Ok(total)
}
