use serde::{Deserialize, Serialize};

use super::{RiskParams, SceneSnapshot};

/// Reciprocal risk of two people `d` meters apart.
#[inline]
pub fn reciprocal_risk(params: &RiskParams, d: f64) -> f64 {
    params.eta * (-params.beta_slope * (d - params.tau).max(0.0)).exp()
}

/// Individual risk of every person: the largest reciprocal risk shared with
/// anyone else, or 0 for a person alone in the scene.
///
/// Reciprocal risk is non-increasing in distance, so the maximum is attained
/// at the nearest neighbour.
pub fn individual_risks(params: &RiskParams, snapshot: &SceneSnapshot) -> Vec<f64> {
    let pts = &snapshot.positions;
    let n = pts.len();
    if n <= 1 {
        return vec![0.0; n];
    }
    let mut nearest_sq = vec![f64::INFINITY; n];
    for i in 0..n {
        for j in i + 1..n {
            let d2 = pts[i].distance_squared(&pts[j]);
            if d2 < nearest_sq[i] {
                nearest_sq[i] = d2;
            }
            if d2 < nearest_sq[j] {
                nearest_sq[j] = d2;
            }
        }
    }
    nearest_sq
        .into_iter()
        .map(|d2| reciprocal_risk(params, d2.sqrt()))
        .collect()
}

/// Capacity-normalized global risk of a snapshot, clamped to 1.
pub fn global_risk(params: &RiskParams, snapshot: &SceneSnapshot) -> f64 {
    let total: f64 = individual_risks(params, snapshot).iter().sum();
    (total / params.capacity.max(1) as f64).min(1.0)
}

/// A pair of people close enough to be drawn as a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    /// 1 at or below `tau`, falling linearly to 0 at `link_max`.
    pub severity: f64,
}

/// All pairs closer than `link_max`, with a severity in [0, 1] for coloring.
///
/// When `link_max == tau` the linear ramp is undefined; every emitted pair is
/// then closer than `tau` and gets severity 1.
pub fn link_severities(params: &RiskParams, snapshot: &SceneSnapshot) -> Vec<Link> {
    let pts = &snapshot.positions;
    let span = params.link_max - params.tau;
    let mut links = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].distance(&pts[j]);
            if d < params.link_max {
                let severity = if span > 0.0 {
                    ((params.link_max - d) / span).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                links.push(Link {
                    i,
                    j,
                    distance: d,
                    severity,
                });
            }
        }
    }
    links
}
