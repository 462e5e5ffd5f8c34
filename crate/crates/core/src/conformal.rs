//! Scalar conformal quantiles, sub-trajectory nonconformity scores,
//! region-based perception error bounds, and the time-based baseline.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::partition::Partition;
use crate::traj::{Dataset, State};
use crate::{Error, Result};

/// Finite sub-trajectory scores for one region plus the conventional
/// infinite sentinel as the final entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub region_index: usize,
    /// Finite scores of contributing trajectories followed by one `+inf`
    /// sentinel.
    pub scores: Vec<f64>,
}

impl ScoreSet {
    pub fn finite_scores(&self) -> &[f64] {
        &self.scores[..self.scores.len() - 1]
    }
}

/// Normalized conformal quantile: with `N` finite scores sorted ascending,
/// returns the score of rank `ceil((N + 1) * level)`; ranks beyond `N`
/// yield `+inf` (the sentinel).
pub fn conformal_quantile(scores: &[f64], level: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("scores must not be NaN"));
    let n = sorted.len();
    let rank = libm::ceil((n as f64 + 1.0) * level) as usize;
    if rank > n {
        Ok(f64::INFINITY)
    } else {
        Ok(sorted[rank.max(1) - 1])
    }
}

/// Per-trajectory maximum perception error over the steps visiting region
/// `region_index` of `partition`. Trajectories that never visit the
/// region contribute no score; the infinite sentinel is appended last.
pub fn subtrajectory_scores(
    dataset: &Dataset,
    partition: &Partition,
    region_index: usize,
) -> ScoreSet {
    let all = region_scores(dataset, partition);
    all.into_iter()
        .nth(region_index)
        .expect("region index within partition")
}

/// Sub-trajectory scores for every region in one pass over the dataset.
pub fn region_scores(dataset: &Dataset, partition: &Partition) -> Vec<ScoreSet> {
    let m = partition.num_regions();
    let mut per_region: Vec<Vec<f64>> = alloc::vec![Vec::new(); m];
    let mut current: Vec<f64> = alloc::vec![f64::NEG_INFINITY; m];
    for tr in &dataset.trajectories {
        for c in current.iter_mut() {
            *c = f64::NEG_INFINITY;
        }
        for step in &tr.steps {
            if let Some(i) = partition.region_index_of(step.state.position) {
                let err = step.perception_error();
                if err > current[i] {
                    current[i] = err;
                }
            }
        }
        for (i, c) in current.iter().enumerate() {
            if c.is_finite() {
                per_region[i].push(*c);
            }
        }
    }
    per_region
        .into_iter()
        .enumerate()
        .map(|(i, mut scores)| {
            scores.push(f64::INFINITY);
            ScoreSet { region_index: i, scores }
        })
        .collect()
}

/// A piecewise-constant state-dependent perception error bound: one
/// conformal bound per region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaFunction {
    pub partition: Partition,
    pub bounds: Vec<f64>,
    pub alpha: f64,
}

/// Fit the region-based bound: each region gets the `1 - alpha/M`
/// conformal quantile of its sub-trajectory scores. Regions never visited
/// by the calibration data get an infinite (vacuous) bound.
pub fn fit_eta(dataset: &Dataset, partition: &Partition, alpha: f64) -> EtaFunction {
    let m = partition.num_regions() as f64;
    let level = 1.0 - alpha / m;
    let bounds = region_scores(dataset, partition)
        .iter()
        .map(|set| {
            let finite = set.finite_scores();
            if finite.is_empty() {
                f64::INFINITY
            } else {
                conformal_quantile(finite, level).expect("nonempty")
            }
        })
        .collect();
    EtaFunction { partition: partition.clone(), bounds, alpha }
}

/// Evaluate the bound at a state; errors if the state escapes the
/// partitioned range (a partition bug, since partitions tile the space).
pub fn eta_eval(eta: &EtaFunction, state: &State) -> Result<f64> {
    eta.partition
        .region_index_of(state.position)
        .map(|i| eta.bounds[i])
        .ok_or(Error::OutsidePartition(state.position))
}

/// A per-timestep bound for the time-based baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBoundFunction {
    /// `eta(k)` for `k = 0..=T`.
    pub per_step_bounds: Vec<f64>,
    pub alpha: f64,
}

/// Floor for the per-step normalizer, guarding noiseless steps.
pub const TIME_NORMALIZER_FLOOR: f64 = 1e-6;

/// Normalized-max time baseline. The alpha split sets the per-step scale
/// `m_t` (max observed error at step `t`); the conformal split is scored
/// by its max normalized error; the resulting quantile rescales `m_t`.
pub fn fit_time_baseline(
    dataset_alpha: &Dataset,
    dataset_conf: &Dataset,
    alpha: f64,
    horizon: u32,
) -> Result<TimeBoundFunction> {
    if dataset_alpha.is_empty() || dataset_conf.is_empty() {
        return Err(Error::InvalidInput("time baseline needs nonempty splits"));
    }
    for ds in [dataset_alpha, dataset_conf] {
        if ds.horizon != horizon {
            return Err(Error::HorizonMismatch { expected: horizon, got: ds.horizon });
        }
    }
    let mut scale = alloc::vec![TIME_NORMALIZER_FLOOR; horizon as usize + 1];
    for tr in &dataset_alpha.trajectories {
        for step in &tr.steps {
            let err = step.perception_error();
            let slot = &mut scale[step.time as usize];
            if err > *slot {
                *slot = err;
            }
        }
    }
    let mut ratios = Vec::with_capacity(dataset_conf.len());
    for tr in &dataset_conf.trajectories {
        let mut r = 0.0f64;
        for step in &tr.steps {
            let v = step.perception_error() / scale[step.time as usize];
            if v > r {
                r = v;
            }
        }
        ratios.push(r);
    }
    let q = conformal_quantile(&ratios, 1.0 - alpha)?;
    let per_step_bounds = scale.iter().map(|m| q * m).collect();
    Ok(TimeBoundFunction { per_step_bounds, alpha })
}

/// Either flavor of fitted bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BoundFunction {
    State(EtaFunction),
    Time(TimeBoundFunction),
}

impl BoundFunction {
    /// Bound value at a recorded step.
    pub fn at(&self, state: &State, time: u32) -> Result<f64> {
        match self {
            BoundFunction::State(eta) => eta_eval(eta, state),
            BoundFunction::Time(tb) => tb
                .per_step_bounds
                .get(time as usize)
                .copied()
                .ok_or(Error::HorizonMismatch {
                    expected: tb.per_step_bounds.len() as u32 - 1,
                    got: time,
                }),
        }
    }
}

/// Fraction of test trajectories whose every realized step satisfies the
/// bound. Expected at least `1 - alpha` for held-out data.
pub fn validate_coverage(bound: &BoundFunction, test: &Dataset) -> f64 {
    if test.is_empty() {
        return 1.0;
    }
    let covered = test
        .trajectories
        .iter()
        .filter(|tr| {
            tr.steps.iter().all(|step| match bound.at(&step.state, step.time) {
                Ok(b) => step.perception_error() <= b,
                Err(_) => false,
            })
        })
        .count();
    covered as f64 / test.len() as f64
}
