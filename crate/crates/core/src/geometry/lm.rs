use nalgebra::{Matrix3, SMatrix, SVector};

use super::{backprojection_error, Correspondence, GeometryError, Homography, Result};

type Mat8 = SMatrix<f64, 8, 8>;
type Vec8 = SVector<f64, 8>;

/// Damping beyond which a rejected step ends the refinement.
const MAX_DAMPING: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmParams {
    pub max_iters: usize,
    /// Convergence threshold on the infinity norm of the parameter step.
    pub tol: f64,
    pub initial_damping: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

fn to_params(h: &Homography) -> Vec8 {
    let r = h.to_row_major();
    Vec8::from_column_slice(&r[..8])
}

fn to_matrix(p: &Vec8) -> Matrix3<f64> {
    Matrix3::new(p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], 1.0)
}

fn cost(p: &Vec8, data: &[Correspondence]) -> Option<f64> {
    let h = Homography::from_matrix(to_matrix(p)).ok()?;
    backprojection_error(&h, data).ok()
}

/// Gauss-Newton pieces `JᵀJ` and `Jᵀr` for the eight free entries, `h33 = 1`.
fn normal_equations(p: &Vec8, data: &[Correspondence]) -> Result<(Mat8, Vec8)> {
    let mut jtj = Mat8::zeros();
    let mut jtr = Vec8::zeros();
    for c in data {
        let (x, y) = (c.ground.x, c.ground.y);
        let w = p[6] * x + p[7] * y + 1.0;
        if w.abs() < super::POINT_AT_INFINITY_EPS {
            return Err(GeometryError::PointAtInfinity(w));
        }
        let pu = (p[0] * x + p[1] * y + p[2]) / w;
        let pv = (p[3] * x + p[4] * y + p[5]) / w;
        let ju = Vec8::from_column_slice(&[x / w, y / w, 1.0 / w, 0.0, 0.0, 0.0, -pu * x / w, -pu * y / w]);
        let jv = Vec8::from_column_slice(&[0.0, 0.0, 0.0, x / w, y / w, 1.0 / w, -pv * x / w, -pv * y / w]);
        let (ru, rv) = (pu - c.image.u, pv - c.image.v);
        jtj += ju * ju.transpose() + jv * jv.transpose();
        jtr += ju * ru + jv * rv;
    }
    Ok((jtj, jtr))
}

/// Levenberg-Marquardt refinement of the back-projection error over the eight
/// free homography entries.
///
/// Steps are only accepted when they lower the error, so the result is never
/// worse than `h0`. Damping is scaled by the diagonal of `JᵀJ`.
pub fn refine_homography_lm(
    h0: &Homography,
    inliers: &[Correspondence],
    params: &LmParams,
) -> Result<Homography> {
    if inliers.len() < 4 {
        return Err(GeometryError::TooFewCorrespondences {
            needed: 4,
            got: inliers.len(),
        });
    }
    let mut p = to_params(h0);
    let mut current = backprojection_error(h0, inliers)?;
    let mut lambda = params.initial_damping;
    let mut ever_solved = false;

    for _ in 0..params.max_iters {
        if current == 0.0 {
            break;
        }
        let (jtj, jtr) = normal_equations(&p, inliers)?;
        let diag_floor = jtj.diagonal().max() * 1e-12;

        let mut stepped = false;
        while lambda <= MAX_DAMPING {
            let mut damped = jtj;
            for i in 0..8 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(diag_floor);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            ever_solved = true;
            let delta = chol.solve(&(-jtr));
            let candidate = p + delta;
            match cost(&candidate, inliers) {
                Some(c) if c < current => {
                    p = candidate;
                    current = c;
                    lambda = (lambda * 0.1).max(f64::MIN_POSITIVE);
                    stepped = true;
                    if delta.amax() < params.tol {
                        return Homography::from_matrix(to_matrix(&p));
                    }
                    break;
                }
                _ => {
                    if delta.amax() < params.tol {
                        // Converged: the remaining step is below tolerance.
                        return Homography::from_matrix(to_matrix(&p));
                    }
                    lambda *= 10.0;
                }
            }
        }
        if !ever_solved {
            return Err(GeometryError::SingularNormalEquations);
        }
        if !stepped {
            break;
        }
    }
    Homography::from_matrix(to_matrix(&p))
}
