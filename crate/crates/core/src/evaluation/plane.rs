use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::EvaluationError;
use crate::geometry::{CameraModel, GroundPoint};

/// Ratio of the middle to the largest scatter eigenvalue under which a point
/// set counts as collinear.
const COLLINEAR_RATIO: f64 = 1e-12;

/// Cosine above which the projected camera x-axis is too short to serve as an
/// in-plane axis.
const PARALLEL_COSINE: f64 = 1.0 - 1e-6;

/// The plane `{x : normal·x = offset}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl Plane {
    pub fn new(normal: Vector3<f64>, offset: f64) -> Result<Self, EvaluationError> {
        let norm = normal.norm();
        if !(norm > 0.0 && norm.is_finite() && offset.is_finite()) {
            return Err(EvaluationError::DegeneratePoints);
        }
        Ok(Self {
            normal: normal / norm,
            offset: offset / norm,
        })
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn project(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p - self.normal * self.signed_distance(p)
    }

    /// Same plane with the normal flipped, if needed, so that `point` lies on
    /// the non-negative side.
    pub fn oriented_toward(self, point: &Vector3<f64>) -> Self {
        if self.signed_distance(point) < 0.0 {
            Self {
                normal: -self.normal,
                offset: -self.offset,
            }
        } else {
            self
        }
    }
}

/// Total-least-squares plane through `points`: the normal is the direction of
/// least scatter about the centroid. The normal faces the origin.
pub fn fit_plane(points: &[Vector3<f64>]) -> Result<Plane, EvaluationError> {
    if points.len() < 3 || points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(EvaluationError::DegeneratePoints);
    }
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    if !(eig.eigenvalues[order[1]] > COLLINEAR_RATIO * largest) {
        return Err(EvaluationError::DegeneratePoints);
    }
    let normal = eig.eigenvectors.column(order[0]).normalize();
    Ok(Plane::new(normal, normal.dot(&centroid))?.oriented_toward(&Vector3::zeros()))
}

/// Orthonormal 2D frame on a plane, anchored at the foot of the camera center.
///
/// The first axis is the camera x-axis projected onto the plane (the camera
/// z-axis when the two are nearly perpendicular to the plane's surface); the
/// second is `normal × first`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame {
    pub plane: Plane,
    pub origin: Vector3<f64>,
    pub axis_u: Vector3<f64>,
    pub axis_v: Vector3<f64>,
}

impl PlaneFrame {
    pub fn new(plane: &Plane, camera: &CameraModel) -> Self {
        let center = camera.center();
        let plane = plane.oriented_toward(&center);
        let n = plane.normal;
        let in_plane = |a: Vector3<f64>| a - n * n.dot(&a);
        let x_axis = camera.rotation.row(0).transpose();
        let z_axis = camera.rotation.row(2).transpose();
        let first = if n.dot(&x_axis).abs() < PARALLEL_COSINE {
            in_plane(x_axis)
        } else {
            in_plane(z_axis)
        }
        .normalize();
        Self {
            plane,
            origin: plane.project(&center),
            axis_u: first,
            axis_v: n.cross(&first),
        }
    }

    /// In-plane coordinates of the orthogonal projection of `p`.
    pub fn to_plane(&self, p: &Vector3<f64>) -> GroundPoint {
        let d = p - self.origin;
        GroundPoint::new(d.dot(&self.axis_u), d.dot(&self.axis_v))
    }

    /// The 3D point with in-plane coordinates `g`.
    pub fn lift(&self, g: GroundPoint) -> Vector3<f64> {
        self.origin + self.axis_u * g.x + self.axis_v * g.y
    }
}

pub fn plane_coordinates(frame: &PlaneFrame, points: &[Vector3<f64>]) -> Vec<GroundPoint> {
    points.iter().map(|p| frame.to_plane(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera() -> CameraModel {
        CameraModel::with_identity_pose(1000.0, 1000.0, 960.0, 540.0).unwrap()
    }

    #[test]
    fn fits_z_zero() {
        let pts = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 2.0, 0.0),
            Vector3::new(3.0, 1.0, 0.0),
        ];
        let p = fit_plane(&pts).unwrap();
        assert!((p.normal.z.abs() - 1.0).abs() < 1e-12);
        assert!(p.offset.abs() < 1e-12);
    }

    #[test]
    fn fits_tilted_plane() {
        let pts: Vec<_> = [(0.0, 0.0), (1.0, 2.0), (-3.0, 1.0), (5.0, -2.0), (2.0, 2.0)]
            .iter()
            .map(|&(x, y)| Vector3::new(x, y, 3.0 - x - y))
            .collect();
        let p = fit_plane(&pts).unwrap();
        let expected = Vector3::new(1.0, 1.0, 1.0) / 3f64.sqrt();
        let sign = p.normal.dot(&expected).signum();
        assert!((p.normal * sign - expected).amax() < 1e-9);
        assert!((p.offset * sign - 3.0 / 3f64.sqrt()).abs() < 1e-9);
        // faces the origin
        assert!(p.signed_distance(&Vector3::zeros()) >= 0.0);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts = [Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 1.0, 1.0), Vector3::new(2.0, 2.0, 2.0)];
        assert_eq!(fit_plane(&pts), Err(EvaluationError::DegeneratePoints));
        assert_eq!(fit_plane(&pts[..2]), Err(EvaluationError::DegeneratePoints));
    }

    #[test]
    fn frame_is_an_isometry() {
        let plane = Plane::new(Vector3::new(0.0, -1.0, 0.0), -1.5).unwrap();
        let f = PlaneFrame::new(&plane, &camera());
        let a = Vector3::new(1.0, 1.5, 4.0);
        let b = Vector3::new(4.0, 1.5, 8.0);
        let (ga, gb) = (f.to_plane(&a), f.to_plane(&b));
        assert!((ga.distance(&gb) - 5.0).abs() < 1e-12);
        assert!((f.lift(ga) - a).amax() < 1e-12);
        assert!((f.axis_u.norm() - 1.0).abs() < 1e-12);
        assert!(f.axis_u.dot(&f.axis_v).abs() < 1e-12);
    }

    #[test]
    fn z_zero_plane_coordinates() {
        let plane = Plane::new(Vector3::new(0.0, 0.0, 1.0), 0.0).unwrap();
        let f = PlaneFrame::new(&plane, &CameraModel::new(1.0, 1.0, 0.0, 0.0, Matrix3::identity(), Vector3::new(0.0, 0.0, 5.0)).unwrap());
        let g = f.to_plane(&Vector3::new(3.0, 4.0, 0.0));
        // the camera sits at z = -5, so the normal is -z and v = -z × x = -y
        assert!((g.x - 3.0).abs() < 1e-12 && (g.y + 4.0).abs() < 1e-12);
    }
}
