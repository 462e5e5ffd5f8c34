//! Core algorithms for state-dependent conformal perception bounds and
//! box reachability of the mountain-car closed loop.
//!
//! The crate is `no_std` + `alloc`: everything here is pure computation.
//! File formats, the CLI, and wall-clock timing live in `conreach-cli`.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod conformal;
pub mod controller;
pub mod dynamics;
pub mod interval;
pub mod noise;
pub mod optimize;
pub mod partition;
pub mod reach;
pub mod rng;
pub mod sim;
pub mod traj;

pub use controller::{Activation, Controller, EnergyController, MlpController, MlpLayer};
pub use conformal::{BoundFunction, EtaFunction, ScoreSet, TimeBoundFunction};
pub use dynamics::MountainCarParams;
pub use interval::{BoxSet, Interval};
pub use noise::{NoiseDistribution, NoiseProfile};
pub use optimize::{OptimizeOutcome, OptimizerKind, OptimizerSpec};
pub use partition::{LossKind, LossSpec, Partition};
pub use reach::{MergeStrategy, ReachTube, VerifySpec};
pub use traj::{Dataset, State, Step, Trajectory};

use core::fmt;

/// Errors surfaced by the core operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A control input outside [-1, 1] was supplied to the dynamics.
    ControlOutOfRange(f64),
    /// MLP layer dimensions do not chain.
    MlpDimensionMismatch { layer: usize, expected: usize, got: usize },
    /// Quantile of an empty score multiset.
    EmptyScores,
    /// A state fell outside every region of a partition.
    OutsidePartition(f64),
    /// Two datasets or a dataset and a bound disagree on the horizon.
    HorizonMismatch { expected: u32, got: u32 },
    /// A structurally invalid input (empty dataset, bad split, ...).
    InvalidInput(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ControlOutOfRange(u) => write!(f, "control {u} outside [-1, 1]"),
            Error::MlpDimensionMismatch { layer, expected, got } => {
                write!(f, "mlp layer {layer}: expected input dim {expected}, got {got}")
            }
            Error::EmptyScores => write!(f, "cannot take a quantile of an empty score set"),
            Error::OutsidePartition(p) => {
                write!(f, "position {p} is outside the partitioned range")
            }
            Error::HorizonMismatch { expected, got } => {
                write!(f, "horizon mismatch: expected {expected}, got {got}")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
