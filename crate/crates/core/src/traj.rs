//! Trajectory and dataset value types shared across the toolkit.
//!
//! All types are immutable plain data; generation lives in [`crate::sim`].

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// A mountain-car state sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub position: f64,
    pub velocity: f64,
}

impl State {
    pub fn new(position: f64, velocity: f64) -> Self {
        Self { position, velocity }
    }
}

/// One recorded step of a closed-loop run: the state, what the perception
/// stack reported, and the control that was applied from that report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub time: u32,
    pub state: State,
    pub measurement: f64,
    pub control: f64,
}

impl Step {
    /// Absolute perception error `|y - p|` at this step.
    pub fn perception_error(&self) -> f64 {
        libm::fabs(self.measurement - self.state.position)
    }
}

/// A closed-loop trajectory. Step times are consecutive from 0; a run that
/// reaches the goal terminates early, so trajectories may be shorter than
/// the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub terminated_at_goal: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A collection of IID trajectories plus the provenance needed to
/// regenerate it byte-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub trajectories: Vec<Trajectory>,
    pub horizon: u32,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}
