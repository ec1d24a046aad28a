//! Reference SIR compartment model and the basic reproduction number.
//! Not used by the live pipeline.

use serde::{Deserialize, Serialize};

/// Basic reproduction number `α·c·d`: transmissibility × contact rate ×
/// duration of infectiousness.
pub fn r0(alpha: f64, contact_rate: f64, duration: f64) -> f64 {
    alpha * contact_rate * duration
}

/// Population fractions: susceptible, infected, removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl SirState {
    pub fn new(s: f64, i: f64, r: f64) -> Self {
        Self { s, i, r }
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.r
    }

    pub fn is_valid(&self) -> bool {
        [self.s, self.i, self.r].iter().all(|v| (0.0..=1.0).contains(v)) && (self.total() - 1.0).abs() <= 1e-9
    }
}

/// Contact rate `β` and removal rate `v` of the SIR equations. Unrelated to
/// the distance-decay slope of the proximity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub beta_contact: f64,
    pub v_removal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirStep {
    pub state: SirState,
    /// A compartment left [0, 1] and was clamped.
    pub clamped: bool,
}

/// One explicit-Euler step of `s' = −βsi`, `i' = βsi − vi`, `r' = vi`.
///
/// The flows out of `s` and into `r` are applied to `i` with opposite sign, so
/// `s + i + r` is preserved up to rounding.
pub fn sir_step(state: SirState, params: SirParams, dt: f64) -> SirStep {
    debug_assert!(dt > 0.0);
    let infection = params.beta_contact * state.s * state.i * dt;
    let removal = params.v_removal * state.i * dt;
    let s = state.s - infection;
    let i = state.i + infection - removal;
    let r = state.r + removal;
    let overshoot = [s, i, r].iter().any(|v| !(0.0..=1.0).contains(v));
    if overshoot {
        // Renormalize after clamping so the total is kept.
        let total = state.total();
        let (s, i, r) = (s.clamp(0.0, 1.0), i.clamp(0.0, 1.0), r.clamp(0.0, 1.0));
        let k = total / (s + i + r);
        return SirStep {
            state: SirState { s: s * k, i: i * k, r: r * k },
            clamped: true,
        };
    }
    SirStep {
        state: SirState { s, i, r },
        clamped: false,
    }
}
