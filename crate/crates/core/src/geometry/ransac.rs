use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{estimate_homography_dlt, Correspondence, GeometryError, Homography, Result};

/// Cross-product magnitude under which three sample points count as collinear.
const COLLINEAR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub iterations: usize,
    /// Maximum one-way reprojection distance in the image plane, in pixels.
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 2000,
            inlier_threshold: 3.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacFit {
    /// DLT refit on all inliers of the best hypothesis.
    pub homography: Homography,
    pub inliers: Vec<bool>,
}

impl RansacFit {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }

    pub fn inlier_correspondences(&self, all: &[Correspondence]) -> Vec<Correspondence> {
        all.iter()
            .zip(&self.inliers)
            .filter_map(|(c, &keep)| keep.then_some(*c))
            .collect()
    }
}

fn collinear(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    cross.abs() < COLLINEAR_TOLERANCE
}

fn sample_is_degenerate(sample: &[Correspondence; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES.iter().any(|t| {
        let g = |i: usize| (sample[i].ground.x, sample[i].ground.y);
        let p = |i: usize| (sample[i].image.u, sample[i].image.v);
        collinear(g(t[0]), g(t[1]), g(t[2])) || collinear(p(t[0]), p(t[1]), p(t[2]))
    })
}

/// Scores a hypothesis: inlier mask, inlier count and the summed squared
/// residual of the inliers (used only to break count ties).
fn score(h: &Homography, correspondences: &[Correspondence], threshold: f64) -> (Vec<bool>, usize, f64) {
    let mut mask = Vec::with_capacity(correspondences.len());
    let mut count = 0;
    let mut residual = 0.0;
    for c in correspondences {
        let inlier = match h.project(c.ground) {
            Ok(p) => {
                let d = p.distance(&c.image);
                if d <= threshold {
                    residual += d * d;
                    true
                } else {
                    false
                }
            }
            Err(_) => false,
        };
        count += inlier as usize;
        mask.push(inlier);
    }
    (mask, count, residual)
}

/// Robust ground → image homography.
///
/// Draws minimal samples of four distinct correspondences (degenerate samples
/// are redrawn), fits each by DLT and keeps the hypothesis with the most
/// inliers, ties going to the smaller inlier residual. The winner is refit by
/// DLT on its inliers. Deterministic for a given `params.seed`.
pub fn estimate_homography_ransac(
    correspondences: &[Correspondence],
    params: &RansacParams,
) -> Result<RansacFit> {
    let n = correspondences.len();
    if n < 4 {
        return Err(GeometryError::TooFewCorrespondences { needed: 4, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let max_draws = params.iterations.saturating_mul(10).max(100);

    let mut best: Option<(Vec<bool>, usize, f64)> = None;
    let mut accepted = 0;
    let mut draws = 0;
    while accepted < params.iterations && draws < max_draws {
        draws += 1;
        let idx = index::sample(&mut rng, n, 4);
        let sample = [
            correspondences[idx.index(0)],
            correspondences[idx.index(1)],
            correspondences[idx.index(2)],
            correspondences[idx.index(3)],
        ];
        if sample_is_degenerate(&sample) {
            continue;
        }
        accepted += 1;
        let Ok(h) = estimate_homography_dlt(&sample) else {
            continue;
        };
        let candidate = score(&h, correspondences, params.inlier_threshold);
        let better = match &best {
            None => true,
            Some((_, count, residual)) => {
                candidate.1 > *count || (candidate.1 == *count && candidate.2 < *residual)
            }
        };
        if better {
            let perfect = candidate.1 == n && candidate.2 == 0.0;
            best = Some(candidate);
            if perfect {
                break;
            }
        }
    }

    let Some((mask, count, _)) = best else {
        return Err(if accepted == 0 {
            GeometryError::DegenerateConfiguration
        } else {
            GeometryError::NoConsensus { inliers: 0 }
        });
    };
    if count < 4 {
        return Err(GeometryError::NoConsensus { inliers: count });
    }
    let inliers: Vec<Correspondence> = correspondences
        .iter()
        .zip(&mask)
        .filter_map(|(c, &keep)| keep.then_some(*c))
        .collect();
    let homography = estimate_homography_dlt(&inliers)?;
    Ok(RansacFit {
        homography,
        inliers: mask,
    })
}
