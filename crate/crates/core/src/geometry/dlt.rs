use nalgebra::{DMatrix, Matrix3};

use super::{Correspondence, GeometryError, Homography, Result};

/// Ratio between the second-smallest and largest singular value of the
/// normalized design matrix below which the null space is considered to be
/// more than one-dimensional.
const RANK_TOLERANCE: f64 = 1e-10;

/// Similarity transform moving points to their centroid and scaling them to a
/// mean distance of √2.
fn isotropic_normalization(points: impl Iterator<Item = (f64, f64)> + Clone) -> Result<Matrix3<f64>> {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(ax, ay), (x, y)| (ax + x, ay + y));
    let (cx, cy) = (sx / n, sy / n);
    let mean_dist = points.map(|(x, y)| (x - cx).hypot(y - cy)).sum::<f64>() / n;
    if !(mean_dist > 0.0) || !mean_dist.is_finite() {
        return Err(GeometryError::DegenerateConfiguration);
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

/// Linear least-squares homography (ground → image) from at least four
/// correspondences, with isotropic conditioning of both point sets.
///
/// The result minimizes the algebraic residual of the stacked linear system;
/// it is exact when the correspondences are.
pub fn estimate_homography_dlt(correspondences: &[Correspondence]) -> Result<Homography> {
    let n = correspondences.len();
    if n < 4 {
        return Err(GeometryError::TooFewCorrespondences { needed: 4, got: n });
    }
    if correspondences
        .iter()
        .any(|c| !c.image.is_finite() || !c.ground.is_finite())
    {
        return Err(GeometryError::NonFinite);
    }

    let t_ground = isotropic_normalization(correspondences.iter().map(|c| (c.ground.x, c.ground.y)))?;
    let t_image = isotropic_normalization(correspondences.iter().map(|c| (c.image.u, c.image.v)))?;

    // Pad to at least 9 rows so the SVD exposes the full right null space.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (k, c) in correspondences.iter().enumerate() {
        let x = t_ground[(0, 0)] * c.ground.x + t_ground[(0, 2)];
        let y = t_ground[(1, 1)] * c.ground.y + t_ground[(1, 2)];
        let u = t_image[(0, 0)] * c.image.u + t_image[(0, 2)];
        let v = t_image[(1, 1)] * c.image.v + t_image[(1, 2)];
        let r = 2 * k;
        a.row_mut(r)
            .copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        a.row_mut(r + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or(GeometryError::DegenerateConfiguration)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let largest = svd.singular_values[order[order.len() - 1]];
    let second_smallest = svd.singular_values[order[1]];
    if !(largest > 0.0) || second_smallest < RANK_TOLERANCE * largest {
        return Err(GeometryError::DegenerateConfiguration);
    }

    let h = v_t.row(order[0]);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_image_inv = t_image
        .try_inverse()
        .ok_or(GeometryError::DegenerateConfiguration)?;
    Homography::from_matrix(t_image_inv * hn * t_ground)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{backprojection_error, GroundPoint, PixelPoint};

    fn corr(u: f64, v: f64, x: f64, y: f64) -> Correspondence {
        Correspondence::new(PixelPoint::new(u, v), GroundPoint::new(x, y))
    }

    #[test]
    fn identity_when_image_equals_ground() {
        let c: Vec<_> = [(0.0, 0.0), (3.0, 0.0), (0.0, 2.0), (4.0, 5.0)]
            .iter()
            .map(|&(x, y)| corr(x, y, x, y))
            .collect();
        let h = estimate_homography_dlt(&c).unwrap().to_row_major();
        let id = Homography::identity().to_row_major();
        for (a, b) in h.iter().zip(id) {
            assert!((a - b).abs() < 1e-10, "{h:?}");
        }
    }

    #[test]
    fn recovers_diagonal_scale() {
        let c = vec![
            corr(0.0, 0.0, 0.0, 0.0),
            corr(2.0, 0.0, 1.0, 0.0),
            corr(0.0, 2.0, 0.0, 1.0),
            corr(2.0, 2.0, 1.0, 1.0),
        ];
        let h = estimate_homography_dlt(&c).unwrap();
        let expected = [2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in h.to_row_major().iter().zip(expected) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(backprojection_error(&h, &c).unwrap() < 1e-16);
    }

    #[test]
    fn collinear_ground_points_are_degenerate() {
        let c: Vec<_> = (0..4)
            .map(|i| corr(i as f64 * 3.0, 1.0 + i as f64, i as f64, 2.0 * i as f64))
            .collect();
        assert_eq!(
            estimate_homography_dlt(&c),
            Err(GeometryError::DegenerateConfiguration)
        );
    }

    #[test]
    fn duplicate_points_are_degenerate() {
        let c = vec![corr(1.0, 1.0, 0.0, 0.0); 5];
        assert_eq!(
            estimate_homography_dlt(&c),
            Err(GeometryError::DegenerateConfiguration)
        );
    }

    #[test]
    fn needs_four_points() {
        let c = vec![corr(0.0, 0.0, 0.0, 0.0); 3];
        assert!(matches!(
            estimate_homography_dlt(&c),
            Err(GeometryError::TooFewCorrespondences { got: 3, .. })
        ));
    }
}
