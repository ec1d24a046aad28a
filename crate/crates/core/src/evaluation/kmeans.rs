use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EvaluationError;
use crate::geometry::GroundPoint;

pub const KMEANS_MAX_ITERS: usize = 300;
pub const KMEANS_TOLERANCE: f64 = 1e-6;

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops after [`KMEANS_MAX_ITERS`] rounds or once no center moves by
/// [`KMEANS_TOLERANCE`] or more. A cluster that empties is reseeded with the
/// point farthest from its assigned center. Centers come back sorted by `y`,
/// then `x`.
pub fn kmeans(points: &[GroundPoint], k: usize, seed: u64) -> Result<Vec<GroundPoint>, EvaluationError> {
    let mut distinct: Vec<(u64, u64)> = points.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if k == 0 || distinct.len() < k || points.iter().any(|p| !p.is_finite()) {
        return Err(EvaluationError::InsufficientPoints {
            needed: k.max(1),
            got: distinct.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut nearest: Vec<f64> = points.iter().map(|p| p.distance_squared(&centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = nearest.iter().rposition(|&d| d > 0.0).expect("k distinct points");
        for (i, &d) in nearest.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = points[pick];
        centers.push(c);
        for (n, p) in nearest.iter_mut().zip(points) {
            *n = n.min(p.distance_squared(&c));
        }
    }

    let mut labels = vec![0usize; points.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        for (label, p) in labels.iter_mut().zip(points) {
            *label = closest(&centers, p);
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (&l, p) in labels.iter().zip(points) {
            sums[l].0 += p.x;
            sums[l].1 += p.y;
            sums[l].2 += 1;
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let (sx, sy, n) = sums[c];
            let next = if n > 0 {
                GroundPoint::new(sx / n as f64, sy / n as f64)
            } else {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        let da = points[a].distance_squared(&centers[labels[a]]);
                        let db = points[b].distance_squared(&centers[labels[b]]);
                        da.total_cmp(&db)
                    })
                    .expect("non-empty");
                labels[far] = c;
                points[far]
            };
            shift = shift.max(next.distance(&centers[c]));
            centers[c] = next;
        }
        if shift < KMEANS_TOLERANCE {
            break;
        }
    }
    centers.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
    Ok(centers)
}

pub fn kmeans9(points: &[GroundPoint], seed: u64) -> Result<Vec<GroundPoint>, EvaluationError> {
    kmeans(points, 9, seed)
}

fn closest(centers: &[GroundPoint], p: &GroundPoint) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = c.distance_squared(p);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}
