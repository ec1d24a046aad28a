use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::calibration::WalkingArea;
use crate::geometry::GroundPoint;
use crate::risk::{reciprocal_risk, RiskParams, SceneSnapshot};

pub const DEFAULT_CELL_SIZE: f64 = 0.25;
pub const DEFAULT_MAX_CELLS: usize = 1_000_000;

/// Dense bird's-eye raster over the ground plane. Row `r`, column `c` covers
/// `[origin.x + c·cell, origin.x + (c+1)·cell) × [origin.y + r·cell, …)`;
/// values are stored row-major with row 0 at the smallest `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGrid {
    pub origin: GroundPoint,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl MapGrid {
    /// All-zero grid covering the bounding box of `area`.
    pub fn covering(area: &WalkingArea, cell_size: f64, max_cells: usize) -> Result<Self, AnalyticsError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(AnalyticsError::InvalidCellSize(cell_size));
        }
        let (lo, hi) = area.bounding_box();
        let width = (((hi.x - lo.x) / cell_size).ceil() as usize).max(1);
        let height = (((hi.y - lo.y) / cell_size).ceil() as usize).max(1);
        let cells = width.saturating_mul(height);
        if cells > max_cells {
            return Err(AnalyticsError::GridTooLarge {
                cells,
                budget: max_cells,
            });
        }
        Ok(Self {
            origin: lo,
            cell_size,
            width,
            height,
            values: vec![0.0; cells],
        })
    }

    pub fn cell_center(&self, row: usize, col: usize) -> GroundPoint {
        GroundPoint::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn same_geometry(&self, other: &MapGrid) -> bool {
        self.origin == other.origin
            && self.cell_size == other.cell_size
            && self.width == other.width
            && self.height == other.height
    }

    /// One CSV line per grid row, row 0 (smallest `y`) first.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 8);
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Plain (P2) 8-bit PGM, values in [0, 1] scaled to 0–255. The image is
    /// flipped so that larger `y` is up.
    pub fn to_pgm(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.values.chunks(self.width).rev() {
            let line: Vec<String> = row
                .iter()
                .map(|v| ((v.clamp(0.0, 1.0) * 255.0).round() as u8).to_string())
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Risk field of the current snapshot: each cell whose center lies in the
/// walking area holds the reciprocal risk a hypothetical person standing there
/// would share with the nearest actual person. Other cells, and every cell of
/// an empty scene, are 0.
pub fn dynamic_risk_map(
    params: &RiskParams,
    snapshot: &SceneSnapshot,
    area: &WalkingArea,
    cell_size: f64,
    max_cells: usize,
) -> Result<MapGrid, AnalyticsError> {
    let mut grid = MapGrid::covering(area, cell_size, max_cells)?;
    if snapshot.positions.is_empty() {
        return Ok(grid);
    }
    for row in 0..grid.height {
        for col in 0..grid.width {
            let c = grid.cell_center(row, col);
            if !area.contains(c) {
                continue;
            }
            let nearest_sq = snapshot
                .positions
                .iter()
                .map(|p| p.distance_squared(&c))
                .fold(f64::INFINITY, f64::min);
            grid.values[row * grid.width + col] = reciprocal_risk(params, nearest_sq.sqrt());
        }
    }
    Ok(grid)
}

/// Running cell-wise mean of dynamic risk maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationMap {
    pub mean: MapGrid,
    pub samples: u64,
}

impl OccupationMap {
    /// Empty accumulator with the geometry of `template`.
    pub fn new(template: &MapGrid) -> Self {
        let mut mean = template.clone();
        mean.values.iter_mut().for_each(|v| *v = 0.0);
        Self { mean, samples: 0 }
    }

    /// Folds one map into the mean: `m ← m + (x − m)/k`.
    pub fn fold(&mut self, map: &MapGrid) -> Result<(), AnalyticsError> {
        if !self.mean.same_geometry(map) {
            return Err(AnalyticsError::GridMismatch);
        }
        self.samples += 1;
        let k = self.samples as f64;
        for (m, x) in self.mean.values.iter_mut().zip(&map.values) {
            *m += (x - *m) / k;
        }
        Ok(())
    }
}

/// Number of unordered pairs strictly closer than `tau`.
pub fn count_infractions(params: &RiskParams, snapshot: &SceneSnapshot) -> usize {
    let pts = &snapshot.positions;
    let tau_sq = params.tau * params.tau;
    let mut count = 0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[i].distance_squared(&pts[j]) < tau_sq {
                count += 1;
            }
        }
    }
    count
}
