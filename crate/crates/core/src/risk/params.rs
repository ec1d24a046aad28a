use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("invalid risk parameter: {0}")]
    InvalidParams(String),
}

/// Parameters of the risk model and of its display/alarm layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    /// Height of the reciprocal-risk curve, in (0, 1]. Lowered e.g. when
    /// masks are worn.
    pub eta: f64,
    /// Exponential decay rate beyond `tau`, 1/m.
    pub beta_slope: f64,
    /// Minimal allowed interpersonal distance, m.
    pub tau: f64,
    /// Scene capacity `C`.
    pub capacity: u32,
    /// Window `W` of the moving averages, in snapshots.
    pub window: usize,
    /// Pairs closer than this are reported as display links, m.
    pub link_max: f64,
    pub alarm_risk_threshold: f64,
    pub alarm_count_threshold: u32,
}

impl Default for RiskParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            beta_slope: 1.0,
            tau: 1.0,
            capacity: 10,
            window: 10,
            link_max: 3.0,
            alarm_risk_threshold: 0.8,
            alarm_count_threshold: 50,
        }
    }
}

impl RiskParams {
    pub fn validate(&self) -> Result<(), RiskError> {
        let bad = |msg: String| Err(RiskError::InvalidParams(msg));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must be in (0, 1], got {}", self.eta));
        }
        if !(self.beta_slope > 0.0 && self.beta_slope.is_finite()) {
            return bad(format!("beta_slope must be positive, got {}", self.beta_slope));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.capacity == 0 {
            return bad("capacity must be at least 1".into());
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if !(self.link_max >= self.tau && self.link_max.is_finite()) {
            return bad(format!(
                "link_max ({}) must be at least tau ({})",
                self.link_max, self.tau
            ));
        }
        if !(self.alarm_risk_threshold > 0.0 && self.alarm_risk_threshold <= 1.0) {
            return bad(format!(
                "alarm_risk_threshold must be in (0, 1], got {}",
                self.alarm_risk_threshold
            ));
        }
        if self.alarm_count_threshold == 0 {
            return bad("alarm_count_threshold must be at least 1".into());
        }
        Ok(())
    }
}
