//! Spatial maps, the coordinate log and periodic reports.

mod map;
mod report;
mod store;

pub use map::{count_infractions, dynamic_risk_map, MapGrid, OccupationMap, DEFAULT_CELL_SIZE, DEFAULT_MAX_CELLS};
pub use report::{aggregate, build_report, HourBucket, OccupationMapRef, Period, Report};
pub use store::{JsonlLogStore, LogRead, LogRecord, LogStore};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("map grid of {cells} cells exceeds the budget of {budget}")]
    GridTooLarge { cells: usize, budget: usize },
    #[error("map grids have different geometry")]
    GridMismatch,
    #[error("cell size must be positive, got {0}")]
    InvalidCellSize(f64),
    #[error("refusing to store non-finite value in field {0}")]
    NonFinite(&'static str),
    #[error("storage error: {0}")]
    Storage(String),
    #[error("corrupt log {path} at line {line}: {message}")]
    CorruptLog {
        path: String,
        line: usize,
        message: String,
    },
}
