//! Mountain-car dynamics in scalar and interval form.

use serde::{Deserialize, Serialize};

use crate::interval::{BoxSet, Interval};
use crate::traj::State;
use crate::{Error, Result};

/// Physical constants of the mountain-car plant plus the two update-rule
/// switches.
///
/// `gym_ordering = false` follows the literal published update, where the
/// position update uses the *old* velocity; `true` uses the new velocity as
/// the OpenAI simulator does. `outward_rounding` widens every interval
/// operation by one ulp for strict floating-point soundness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MountainCarParams {
    pub power: f64,
    pub gravity: f64,
    pub frequency: f64,
    pub goal_position: f64,
    pub position_bounds: Interval,
    pub velocity_bounds: Interval,
    pub gym_ordering: bool,
    pub outward_rounding: bool,
}

impl Default for MountainCarParams {
    fn default() -> Self {
        Self {
            power: 0.0015,
            gravity: 0.0025,
            frequency: 3.0,
            goal_position: 0.45,
            position_bounds: Interval::new(-1.2, 0.6),
            velocity_bounds: Interval::new(-0.07, 0.07),
            gym_ordering: false,
            outward_rounding: false,
        }
    }
}

/// One scalar step of the plant. Velocity saturates at its bounds; when the
/// position clamps at the left wall the velocity is zeroed.
pub fn dynamics_step(state: &State, control: f64, params: &MountainCarParams) -> Result<State> {
    if !(-1.0..=1.0).contains(&control) || !control.is_finite() {
        return Err(Error::ControlOutOfRange(control));
    }
    let accel = params.power * control - params.gravity * libm::cos(params.frequency * state.position);
    let mut v = (state.velocity + accel)
        .max(params.velocity_bounds.lo)
        .min(params.velocity_bounds.hi);
    let p_raw = state.position + if params.gym_ordering { v } else { state.velocity };
    let mut p = p_raw.max(params.position_bounds.lo).min(params.position_bounds.hi);
    if p_raw < params.position_bounds.lo {
        v = 0.0;
    }
    p = p.min(params.position_bounds.hi);
    Ok(State::new(p, v))
}

/// Interval image of [`dynamics_step`] over a box of states and an interval
/// of controls. Sound: contains every scalar successor.
pub fn dynamics_step_interval(
    set: &BoxSet,
    control: &Interval,
    params: &MountainCarParams,
) -> BoxSet {
    let w = |iv: Interval| {
        if params.outward_rounding {
            iv.widen_ulp()
        } else {
            iv
        }
    };
    let cos_term = w(set.position.scale(params.frequency)).cos();
    let accel = w(control.scale(params.power)).add(&w(cos_term.scale(-params.gravity)));
    let mut v = w(set.velocity.add(&w(accel))).clamp_to(&params.velocity_bounds);
    let v_for_pos = if params.gym_ordering { &v } else { &set.velocity };
    let p_raw = w(set.position.add(v_for_pos));
    let p = p_raw.clamp_to(&params.position_bounds);
    // left-wall zeroing: states that clamp at the left boundary reset v to 0
    if p_raw.lo < params.position_bounds.lo {
        if p_raw.hi < params.position_bounds.lo {
            v = Interval::point(0.0);
        } else {
            v = v.hull(&Interval::point(0.0));
        }
    }
    BoxSet::new(p, v)
}
