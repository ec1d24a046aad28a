pub mod analytics;
pub mod calibration;
pub mod evaluation;
pub mod geometry;
pub mod ingest;
pub mod pipeline;
pub mod risk;
