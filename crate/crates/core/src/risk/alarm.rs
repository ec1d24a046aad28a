use serde::{Deserialize, Serialize};

use super::RiskParams;

/// An armed alarm re-arms once its value drops below this fraction of the
/// threshold.
pub const REARM_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmKind {
    /// Dynamic risk reached `alarm_risk_threshold`.
    Risk,
    /// Smoothed people count reached `alarm_count_threshold`.
    Crowd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlarmEvent {
    pub kind: AlarmKind,
    pub timestamp: f64,
    pub value: f64,
    pub threshold: f64,
}

/// Level-triggered check: one event per threshold currently reached
/// (comparison is inclusive).
pub fn check_alarms(params: &RiskParams, timestamp: f64, dynamic_risk: f64, count: f64) -> Vec<AlarmEvent> {
    let mut events = Vec::new();
    if dynamic_risk >= params.alarm_risk_threshold {
        events.push(AlarmEvent {
            kind: AlarmKind::Risk,
            timestamp,
            value: dynamic_risk,
            threshold: params.alarm_risk_threshold,
        });
    }
    let count_threshold = params.alarm_count_threshold as f64;
    if count >= count_threshold {
        events.push(AlarmEvent {
            kind: AlarmKind::Crowd,
            timestamp,
            value: count,
            threshold: count_threshold,
        });
    }
    events
}

/// Edge-triggered alarms with hysteresis.
///
/// Each alarm kind fires once when its value reaches the threshold, then
/// stays silent until the value falls below `REARM_FRACTION · threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlarmMonitor {
    risk_armed: bool,
    crowd_armed: bool,
}

impl Default for AlarmMonitor {
    fn default() -> Self {
        Self {
            risk_armed: true,
            crowd_armed: true,
        }
    }
}

impl AlarmMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, params: &RiskParams, timestamp: f64, dynamic_risk: f64, count: f64) -> Vec<AlarmEvent> {
        let mut fired = Vec::new();
        for event in check_alarms(params, timestamp, dynamic_risk, count) {
            let armed = match event.kind {
                AlarmKind::Risk => &mut self.risk_armed,
                AlarmKind::Crowd => &mut self.crowd_armed,
            };
            if *armed {
                *armed = false;
                fired.push(event);
            }
        }
        if dynamic_risk < REARM_FRACTION * params.alarm_risk_threshold {
            self.risk_armed = true;
        }
        if count < REARM_FRACTION * params.alarm_count_threshold as f64 {
            self.crowd_armed = true;
        }
        fired
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> RiskParams {
        RiskParams {
            alarm_risk_threshold: 0.8,
            alarm_count_threshold: 20,
            ..Default::default()
        }
    }

    #[test]
    fn level_checks() {
        let p = params();
        let e = check_alarms(&p, 1.0, 0.9, 0.0);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].kind, AlarmKind::Risk);
        assert_eq!(e[0].value, 0.9);
        assert_eq!(check_alarms(&p, 1.0, 0.8, 0.0).len(), 1);
        assert!(check_alarms(&p, 1.0, 0.0, 0.0).is_empty());
        let both = check_alarms(&p, 1.0, 1.0, 20.0);
        assert_eq!(both.iter().map(|e| e.kind).collect::<Vec<_>>(), vec![AlarmKind::Risk, AlarmKind::Crowd]);
    }

    #[test]
    fn hysteresis() {
        let p = params();
        let mut m = AlarmMonitor::new();
        let seq = [0.5, 0.85, 0.9, 0.79, 0.77, 0.85, 0.75, 0.81];
        let fired: Vec<usize> = seq
            .iter()
            .enumerate()
            .filter(|(k, &d)| !m.check(&p, *k as f64, d, 0.0).is_empty())
            .map(|(k, _)| k)
            .collect();
        // 0.79 and 0.77 stay above the re-arm level 0.76; 0.75 re-arms.
        assert_eq!(fired, vec![1, 7]);
    }
}
