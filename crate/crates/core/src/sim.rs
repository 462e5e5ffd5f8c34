//! Closed-loop trajectory generation for the abstracted system: plant,
//! noisy perception, controller.

use rand::Rng;

use crate::controller::Controller;
use crate::dynamics::{dynamics_step, MountainCarParams};
use crate::interval::Interval;
use crate::noise::{perceive, NoiseProfile};
use crate::rng::{indexed_seed, rng_from_seed};
use crate::traj::{Dataset, State, Step, Trajectory};
use crate::Result;

/// Roll the closed loop forward from `initial` for at most `horizon`
/// steps, terminating early once the goal position is reached. Every
/// recorded step carries the perceived position and the control computed
/// from it; the final step's control is recorded but never applied.
pub fn simulate<R: Rng + ?Sized>(
    initial: State,
    ctrl: &Controller,
    profile: &NoiseProfile,
    params: &MountainCarParams,
    horizon: u32,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut state = initial;
    let mut steps = alloc::vec::Vec::with_capacity(horizon as usize + 1);
    let mut terminated_at_goal = false;
    for t in 0..=horizon {
        let measurement = perceive(&state, profile, rng);
        let control = ctrl.eval(measurement, state.velocity)?;
        steps.push(Step { time: t, state, measurement, control });
        if state.position >= params.goal_position {
            terminated_at_goal = true;
            break;
        }
        if t == horizon {
            break;
        }
        state = dynamics_step(&state, control, params)?;
    }
    Ok(Trajectory { steps, terminated_at_goal })
}

/// Generate `n` IID trajectories with initial positions drawn uniformly
/// from `initial_set` and zero initial velocity. Each trajectory owns an
/// independent random stream derived from `(seed, index)`, so generation
/// is order-independent and reproducible.
pub fn generate_dataset(
    n: usize,
    initial_set: &Interval,
    ctrl: &Controller,
    profile: &NoiseProfile,
    params: &MountainCarParams,
    horizon: u32,
    seed: u64,
) -> Result<Dataset> {
    let mut trajectories = alloc::vec::Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = rng_from_seed(indexed_seed(seed, i as u64));
        let p0 = if initial_set.width() == 0.0 {
            initial_set.lo
        } else {
            rng.random_range(initial_set.lo..=initial_set.hi)
        };
        trajectories.push(simulate(
            State::new(p0, 0.0),
            ctrl,
            profile,
            params,
            horizon,
            &mut rng,
        )?);
    }
    Ok(Dataset { trajectories, horizon, seed })
}
