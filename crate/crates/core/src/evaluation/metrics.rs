use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{match_frame, EvaluationError, GroundFrame};

pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.5, 1.0, 1.5];
pub const DEFAULT_RANGES: [f64; 4] = [10.0, 20.0, 30.0, 100.0];
pub const DEFAULT_STRIDE: u64 = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    /// Precision, recall and F1 in percent.
    ///
    /// With nothing to find and nothing predicted all three are 100. An empty
    /// denominator otherwise gives 0, as does F1 when precision and recall
    /// are both 0.
    pub fn scores(&self) -> Scores {
        let Counts { tp, fp, fn_ } = *self;
        if tp + fp + fn_ == 0 {
            return Scores {
                precision: 100.0,
                recall: 100.0,
                f1: 100.0,
            };
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Scores { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Scores for one (threshold, range) pair. `aggregate` pools counts over all
/// sampled frames; `macro_avg` averages per-sequence scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub threshold_m: f64,
    pub max_range_m: f64,
    pub counts: Counts,
    pub aggregate: Scores,
    pub macro_avg: Scores,
    pub sequences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub thresholds: Vec<f64>,
    pub ranges: Vec<f64>,
    pub stride: u64,
    pub frames_used: usize,
    /// Threshold-major: all ranges of the first threshold, then the next.
    pub cells: Vec<MetricCell>,
}

impl MetricsTable {
    pub fn cell(&self, threshold: f64, range: f64) -> Option<&MetricCell> {
        self.cells
            .iter()
            .find(|c| c.threshold_m == threshold && c.max_range_m == range)
    }

    /// One row per threshold and averaging variant, with precision, recall
    /// and F1 columns for each range.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,threshold_m");
        for r in &self.ranges {
            let _ = write!(out, ",PR@{r},RE@{r},F1@{r}");
        }
        out.push('\n');
        for variant in ["aggregate", "macro"] {
            for &t in &self.thresholds {
                let _ = write!(out, "{variant},{t}");
                for &r in &self.ranges {
                    let cell = self.cell(t, r).expect("full table");
                    let s = if variant == "macro" { cell.macro_avg } else { cell.aggregate };
                    let _ = write!(out, ",{:.2},{:.2},{:.2}", s.precision, s.recall, s.f1);
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

/// Keeps ground truth within `max_range` metres of the camera center and
/// predictions within `max_range` of the camera's foot on the ground plane.
pub fn apply_range_filter(frame: &GroundFrame, max_range: f64) -> GroundFrame {
    GroundFrame {
        frame_id: frame.frame_id,
        sequence: frame.sequence.clone(),
        gt: frame.gt.iter().copied().filter(|g| g.range <= max_range).collect(),
        pred: frame.pred.iter().copied().filter(|p| p.range <= max_range).collect(),
    }
}

/// Scores every `stride`-th frame (by `frame_id`) for each threshold and
/// range.
pub fn compute_metrics(
    frames: &[GroundFrame],
    thresholds: &[f64],
    ranges: &[f64],
    stride: u64,
) -> Result<MetricsTable, EvaluationError> {
    if stride == 0 {
        return Err(EvaluationError::InvalidArgument("stride must be at least 1".into()));
    }
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(EvaluationError::InvalidArgument("thresholds must be positive".into()));
    }
    if ranges.is_empty() || ranges.iter().any(|r| !(*r > 0.0)) {
        return Err(EvaluationError::InvalidArgument("ranges must be positive".into()));
    }
    let sampled: Vec<&GroundFrame> = frames.iter().filter(|f| f.frame_id % stride == 0).collect();

    let mut cells = Vec::with_capacity(thresholds.len() * ranges.len());
    for &t in thresholds {
        for &range in ranges {
            let mut total = Counts::default();
            let mut per_sequence: BTreeMap<&str, Counts> = BTreeMap::new();
            for f in &sampled {
                let f_r = apply_range_filter(f, range);
                let gt: Vec<_> = f_r.gt.iter().map(|g| g.position).collect();
                let pred: Vec<_> = f_r.pred.iter().map(|p| p.position).collect();
                let m = match_frame(&gt, &pred, t);
                let c = per_sequence.entry(f.sequence.as_deref().unwrap_or("")).or_default();
                for acc in [&mut total, c] {
                    acc.tp += m.true_positives;
                    acc.fp += m.false_positives;
                    acc.fn_ += m.false_negatives;
                }
            }
            let macro_avg = if per_sequence.is_empty() {
                total.scores()
            } else {
                let k = per_sequence.len() as f64;
                let sum = per_sequence.values().map(Counts::scores).fold((0.0, 0.0, 0.0), |a, s| {
                    (a.0 + s.precision, a.1 + s.recall, a.2 + s.f1)
                });
                Scores {
                    precision: sum.0 / k,
                    recall: sum.1 / k,
                    f1: sum.2 / k,
                }
            };
            cells.push(MetricCell {
                threshold_m: t,
                max_range_m: range,
                counts: total,
                aggregate: total.scores(),
                macro_avg,
                sequences: per_sequence.len(),
            });
        }
    }
    Ok(MetricsTable {
        thresholds: thresholds.to_vec(),
        ranges: ranges.to_vec(),
        stride,
        frames_used: sampled.len(),
        cells,
    })
}
