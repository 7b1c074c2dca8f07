//! Plane-ticket pricing environment.
//!
//! The state is the ticket price signal, u^o is a slowly varying demand
//! factor the expert observes (mean of `M` uniform draws) and u^ε is a
//! correlated shock that corrupts both the price and the recorded action.

use super::confounder::{per_draw_std, ConfounderState, Draw};
use super::spec::{EnvSpec, PlaneTicketParams};
use super::StepRecord;
use crate::rng::Rng;
use crate::{Error, Result};

/// Smallest |u^o| used as a divisor by the expert.
pub const UO_GUARD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneTicket {
    pub k: usize,
    pub m: usize,
    pub noise_scale: f64,
    pub params: PlaneTicketParams,
}

impl PlaneTicket {
    pub fn from_spec(spec: &EnvSpec) -> Result<Self> {
        Ok(Self {
            k: spec.k,
            m: spec.m,
            noise_scale: spec.noise_scale(),
            params: spec.plane_params()?,
        })
    }

    pub fn confounders(&self, rng: &mut Rng) -> Result<ConfounderState> {
        ConfounderState::moving_average(
            self.m,
            Draw::Uniform {
                low: self.params.uo_low,
                high: self.params.uo_high,
            },
            self.k,
            Draw::Normal {
                std: per_draw_std(self.params.ueps_std, self.k),
            },
            rng,
        )
    }
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `s_t = sign(s_{t-1}) u^o_t - u^ε_t`, with `sign(0) = +1`.
pub fn transition(s_prev: f64, uo: f64, ueps: f64) -> f64 {
    sign(s_prev) * uo - ueps
}

/// `clip(-s / u^o, -1, 1)` with |u^o| clamped away from zero.
pub fn expert_action(s: f64, uo: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    if uo == 0.0 || !uo.is_finite() {
        return Err(Error::DivisionGuard(format!("expert called with u^o = {uo}")));
    }
    let denom = if uo.abs() < UO_GUARD {
        UO_GUARD.copysign(uo)
    } else {
        uo
    };
    Ok((-s / denom).clamp(-1.0, 1.0))
}

pub fn reward(s: f64, uo: f64, a: f64) -> f64 {
    let e = s + uo * a;
    -(e * e)
}

/// One expert step: advances the confounders, moves the state and records
/// the noised expert action.
pub fn plane_ticket_step(
    env: &PlaneTicket,
    t: usize,
    s_prev: f64,
    conf: &mut ConfounderState,
    rng: &mut Rng,
) -> Result<StepRecord> {
    let (uo, ueps) = conf.step(rng);
    let s = transition(s_prev, uo, ueps);
    let a = expert_action(s, uo)? + env.noise_scale * ueps;
    Ok(StepRecord {
        t,
        s: vec![s],
        a: vec![a],
        uo,
        ueps,
        r: reward(s, uo, a),
    })
}
