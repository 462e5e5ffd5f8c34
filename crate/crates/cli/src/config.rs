//! Pipeline configuration: desk-scale defaults, the paper-scale profile,
//! and validation of the dataset split sizes.

use std::path::PathBuf;

use conreach_core::optimize::OptimizerKind;
use conreach_core::partition::LossKind;
use conreach_core::reach::MergeStrategy;
use conreach_core::{Controller, Interval, MlpController, MountainCarParams, NoiseProfile};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Everything the four pipeline stages need, in one serializable value.
///
/// Dataset splits are contiguous index ranges over the IID-generated
/// trajectory list: `[0, n_cal)` is calibration and the rest is the test
/// set; within calibration, `[0, n_reg)` fits region edges and the rest
/// fits the conformal bounds, while independently `[0, n_baseline_alpha)`
/// fits the baseline's per-step normalizers and the rest its quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Miscoverage level of every fitted bound.
    pub alpha: f64,
    /// Trajectory/verification horizon in steps.
    pub horizon: u32,
    /// Total trajectories generated; `n_total - n_cal` form the test set.
    pub n_total: usize,
    pub n_cal: usize,
    /// Calibration trajectories used to fit region edges.
    pub n_reg: usize,
    /// Calibration trajectories used for the baseline's normalizers.
    pub n_baseline_alpha: usize,
    /// Initial position set for trajectory generation.
    pub train_initial_set: [f64; 2],
    /// Restricted initial position set for verification.
    pub verify_initial_set: [f64; 2],
    /// Number of equal sub-intervals the verification initial set is cut into.
    pub subdivisions: usize,
    pub merge_strategy: MergeStrategy,
    /// Steps between merge-scan checkpoints.
    pub normalize_period: u32,
    /// GreedyMerge per-region branch-count trigger.
    pub greedy_threshold: usize,
    /// Region counts to calibrate; optimized methods skip M = 1.
    pub m_values: Vec<usize>,
    pub optimizers: Vec<OptimizerKind>,
    pub losses: Vec<LossKind>,
    /// Per-step decay base of the time-decay loss.
    pub decay: f64,
    /// Loss evaluations per optimizer run.
    pub budget: usize,
    /// GA population size.
    pub population: usize,
    /// Master seed; all stage randomness derives from it via named substreams.
    pub seed: u64,
    /// Output directory for all artifacts.
    pub out_dir: PathBuf,
    pub params: MountainCarParams,
    pub controller: Controller,
    pub noise: NoiseProfile,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            horizon: 90,
            n_total: 1000,
            n_cal: 500,
            n_reg: 125,
            n_baseline_alpha: 25,
            train_initial_set: [-0.55, -0.45],
            verify_initial_set: [-0.51, -0.49],
            subdivisions: 50,
            merge_strategy: MergeStrategy::OppMerge,
            normalize_period: 5,
            greedy_threshold: 8,
            m_values: vec![1, 2, 3, 5],
            optimizers: vec![OptimizerKind::Ga, OptimizerKind::Sa],
            losses: vec![LossKind::El, LossKind::Etdl],
            decay: 0.9,
            budget: 750,
            population: 30,
            seed: 31,
            out_dir: PathBuf::from("out"),
            params: MountainCarParams::default(),
            controller: Controller::Mlp(MlpController::default_policy()),
            noise: NoiseProfile::default_heteroskedastic(),
        }
    }
}

impl PipelineConfig {
    /// Switch the dataset, subdivision, and search budgets to the full
    /// experiment scale (4,000 trajectories, 200 sub-intervals, M up to 7).
    pub fn apply_paper_scale(&mut self) {
        self.n_total = 4000;
        self.n_cal = 2000;
        self.n_reg = 500;
        self.n_baseline_alpha = 100;
        self.subdivisions = 200;
        self.m_values = vec![1, 2, 3, 4, 5, 6, 7];
        self.budget = 1500;
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if self.n_cal == 0 || self.n_cal >= self.n_total {
            return fail(format!(
                "need 0 < n_cal < n_total, got n_cal={} n_total={}",
                self.n_cal, self.n_total
            ));
        }
        if self.n_reg == 0 || self.n_reg >= self.n_cal {
            return fail(format!(
                "need 0 < n_reg < n_cal, got n_reg={} n_cal={}",
                self.n_reg, self.n_cal
            ));
        }
        if self.n_baseline_alpha == 0 || self.n_baseline_alpha >= self.n_cal {
            return fail(format!(
                "need 0 < n_baseline_alpha < n_cal, got n_baseline_alpha={} n_cal={}",
                self.n_baseline_alpha, self.n_cal
            ));
        }
        for (name, set) in
            [("train_initial_set", self.train_initial_set), ("verify_initial_set", self.verify_initial_set)]
        {
            if !(set[0] < set[1]) {
                return fail(format!("{name} must satisfy lo < hi, got [{}, {}]", set[0], set[1]));
            }
            if set[0] < self.params.position_bounds.lo || set[1] > self.params.position_bounds.hi {
                return fail(format!("{name} [{}, {}] exceeds the position bounds", set[0], set[1]));
            }
        }
        if self.subdivisions == 0 {
            return fail("subdivisions must be at least 1".into());
        }
        if self.m_values.is_empty() || self.m_values.contains(&0) {
            return fail("m_values must be non-empty with every M >= 1".into());
        }
        if self.budget == 0 || self.population == 0 {
            return fail("budget and population must be at least 1".into());
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return fail(format!("decay must be in (0, 1], got {}", self.decay));
        }
        Ok(())
    }

    pub fn train_initial_interval(&self) -> Interval {
        Interval::new(self.train_initial_set[0], self.train_initial_set[1])
    }

    pub fn verify_initial_interval(&self) -> Interval {
        Interval::new(self.verify_initial_set[0], self.verify_initial_set[1])
    }

    /// Full position range: the partitioned state space.
    pub fn position_range(&self) -> Interval {
        self.params.position_bounds
    }
}
