//! Proximity contagion-risk model.
//!
//! For a scene of `N` people on the ground plane:
//!
//! * the reciprocal risk of a pair at distance `d` is
//!   `η·exp(−β·max(0, d − τ))`, flat at `η` up to the minimal allowed
//!   distance `τ` and decaying exponentially beyond it;
//! * a person's individual risk `Rᵢ` is the largest reciprocal risk they share
//!   with anyone else (zero when alone);
//! * the global risk is `G = min(1, ΣRᵢ / C)` for scene capacity `C`;
//! * the dynamic risk `D` is the mean of `G` over the last `W` snapshots and
//!   drives the alarms.
//!
//! The module also carries the display-oriented pieces (link severities,
//! people-counter smoothing), a lattice capacity estimate and a small SIR
//! reference integrator.

mod alarm;
mod capacity;
mod model;
mod params;
mod sir;
mod state;

pub use alarm::{check_alarms, AlarmEvent, AlarmKind, AlarmMonitor, REARM_FRACTION};
pub use capacity::{estimate_capacity, hex_lattice};
pub use model::{global_risk, individual_risks, link_severities, reciprocal_risk, Link};
pub use params::{RiskError, RiskParams};
pub use sir::{r0, sir_step, SirParams, SirState, SirStep};
pub use state::RiskState;

use serde::{Deserialize, Serialize};

use crate::geometry::GroundPoint;

/// Ground positions of the people monitored in one frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneSnapshot {
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
    pub positions: Vec<GroundPoint>,
}

impl SceneSnapshot {
    pub fn new(timestamp: f64, positions: Vec<GroundPoint>) -> Self {
        Self {
            timestamp,
            positions,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}
