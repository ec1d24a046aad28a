use serde::{Deserialize, Serialize};

use crate::geometry::GroundPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt: usize,
    pub pred: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub pairs: Vec<MatchedPair>,
}

impl MatchResult {
    pub fn total_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.distance).sum()
    }
}

/// One-to-one matching of predictions to ground truth.
///
/// A pair is admissible when its distance is at most `t`. Among matchings of
/// admissible pairs, the result has maximum cardinality and, within that, the
/// smallest total distance.
pub fn match_frame(gt: &[GroundPoint], pred: &[GroundPoint], t: f64) -> MatchResult {
    let (n, m) = (gt.len(), pred.len());
    let mut result = MatchResult::default();
    if n > 0 && m > 0 {
        // Forbidden pairs cost more than any admissible matching can sum to,
        // so one extra admissible pair always outweighs distance savings.
        let forbidden = 2.0 * (n.min(m) as f64 + 1.0) * t + 1.0;
        let transpose = n > m;
        let (rows, cols) = if transpose { (m, n) } else { (n, m) };
        let dist = |r: usize, c: usize| {
            let (i, j) = if transpose { (c, r) } else { (r, c) };
            gt[i].distance(&pred[j])
        };
        let cost: Vec<Vec<f64>> = (0..rows)
            .map(|r| {
                (0..cols)
                    .map(|c| {
                        let d = dist(r, c);
                        if d <= t { d } else { forbidden }
                    })
                    .collect()
            })
            .collect();
        for (r, c) in hungarian(&cost).into_iter().enumerate() {
            let d = dist(r, c);
            if d <= t {
                let (gt, pred) = if transpose { (c, r) } else { (r, c) };
                result.pairs.push(MatchedPair { gt, pred, distance: d });
            }
        }
        result.pairs.sort_by_key(|p| p.gt);
    }
    result.true_positives = result.pairs.len();
    result.false_positives = m - result.true_positives;
    result.false_negatives = n - result.true_positives;
    result
}

/// Minimum-cost assignment of every row to a distinct column (rows ≤ cols),
/// by shortest augmenting paths with potentials. Returns the column of each
/// row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: row (1-based) assigned to column j; column 0 is a sentinel
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
