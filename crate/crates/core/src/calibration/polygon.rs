use serde::{Deserialize, Serialize};

use super::CalibrationError;
use crate::geometry::GroundPoint;

/// Operator-drawn region of the ground plane that is monitored.
///
/// A simple (non-self-intersecting) polygon with non-zero area. Either
/// traversal direction is accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GroundPoint>", into = "Vec<GroundPoint>")]
pub struct WalkingArea {
    vertices: Vec<GroundPoint>,
}

fn cross(o: GroundPoint, a: GroundPoint, b: GroundPoint) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: GroundPoint, a: GroundPoint, b: GroundPoint, eps: f64) -> bool {
    let len = a.distance(&b);
    if len == 0.0 {
        return p.distance(&a) <= eps;
    }
    // distance from the supporting line, then the projection parameter
    if cross(a, b, p).abs() / len > eps {
        return false;
    }
    let t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len);
    (-eps / len..=1.0 + eps / len).contains(&t)
}

fn segments_intersect(a: GroundPoint, b: GroundPoint, c: GroundPoint, d: GroundPoint) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d, 0.0))
        || (d2 == 0.0 && on_segment(b, c, d, 0.0))
        || (d3 == 0.0 && on_segment(c, a, b, 0.0))
        || (d4 == 0.0 && on_segment(d, a, b, 0.0))
}

impl WalkingArea {
    pub fn new(vertices: Vec<GroundPoint>) -> Result<Self, CalibrationError> {
        if vertices.len() < 3 {
            return Err(CalibrationError::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(CalibrationError::InvalidPolygon("non-finite vertex".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(CalibrationError::InvalidPolygon(format!(
                    "repeated consecutive vertex at index {i}"
                )));
            }
        }
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for j in i + 1..n {
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // shared endpoint only; reject a fold back along the same line
                    let (shared, other_a, other_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    if cross(shared, other_a, other_b) == 0.0
                        && (other_a.x - shared.x) * (other_b.x - shared.x)
                            + (other_a.y - shared.y) * (other_b.y - shared.y)
                            > 0.0
                    {
                        return Err(CalibrationError::SelfIntersectingPolygon);
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(CalibrationError::SelfIntersectingPolygon);
                }
            }
        }
        let area = Self::signed_area_of(&vertices);
        if !(area.abs() > 0.0) {
            return Err(CalibrationError::InvalidPolygon("polygon has zero area".into()));
        }
        Ok(Self { vertices })
    }

    fn signed_area_of(v: &[GroundPoint]) -> f64 {
        let n = v.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
    }

    pub fn vertices(&self) -> &[GroundPoint] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        Self::signed_area_of(&self.vertices).abs()
    }

    /// `(min, max)` corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (GroundPoint, GroundPoint) {
        let mut lo = GroundPoint::new(f64::INFINITY, f64::INFINITY);
        let mut hi = GroundPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Inclusive point-in-polygon test: points on an edge are inside.
    pub fn contains(&self, p: GroundPoint) -> bool {
        let n = self.vertices.len();
        let scale = self
            .vertices
            .iter()
            .fold(1.0_f64, |m, v| m.max(v.x.abs()).max(v.y.abs()));
        let eps = 1e-12 * scale;
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if on_segment(p, a, b, eps) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

impl TryFrom<Vec<GroundPoint>> for WalkingArea {
    type Error = CalibrationError;

    fn try_from(v: Vec<GroundPoint>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<WalkingArea> for Vec<GroundPoint> {
    fn from(a: WalkingArea) -> Self {
        a.vertices
    }
}
