//! Axis-aligned partitions of the position range and the two partition
//! quality losses (experience loss and its time-decayed variant).
//!
//! Regions are half-open `[lo, hi)` with the final region closed, so the
//! partition is a true disjoint cover of the range.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::conformal::EtaFunction;
use crate::interval::{BoxSet, Interval};
use crate::traj::Dataset;

/// The partitioned coordinate. Only position is used by the case study;
/// the selector exists so a velocity partition needs no schema change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PartitionDim {
    #[default]
    Position,
}

/// `M` disjoint half-open regions tiling `range`, encoded as `M - 1`
/// strictly increasing interior edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    #[serde(default)]
    pub dim: PartitionDim,
    pub edges: Vec<f64>,
    pub range: Interval,
}

impl Partition {
    pub fn new(edges: Vec<f64>, range: Interval) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|e| range.lo < *e && *e < range.hi));
        Self { dim: PartitionDim::Position, edges, range }
    }

    pub fn num_regions(&self) -> usize {
        self.edges.len() + 1
    }

    /// The position interval of region `i`.
    pub fn region_interval(&self, i: usize) -> Interval {
        let lo = if i == 0 { self.range.lo } else { self.edges[i - 1] };
        let hi = if i == self.edges.len() { self.range.hi } else { self.edges[i] };
        Interval::new(lo, hi)
    }

    /// Region box: position slice times the full velocity extent.
    pub fn region_box(&self, i: usize, velocity_bounds: &Interval) -> BoxSet {
        BoxSet::new(self.region_interval(i), *velocity_bounds)
    }

    /// Index of the region containing `position`, or `None` outside the
    /// range. Shared edges belong to the right region; the range maximum
    /// belongs to the last region.
    pub fn region_index_of(&self, position: f64) -> Option<usize> {
        if position < self.range.lo || position > self.range.hi {
            return None;
        }
        match self.edges.iter().position(|e| position < *e) {
            Some(i) => Some(i),
            None => Some(self.edges.len()),
        }
    }
}

/// `M` equal-width regions over `range`.
pub fn uniform_partition(m: usize, range: Interval) -> Partition {
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    for i in 1..m {
        edges.push(range.lo + range.width() * i as f64 / m as f64);
    }
    Partition::new(edges, range)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    El,
    Etdl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Per-step decay base for ETDL; ignored by EL.
    pub decay_base: f64,
}

impl LossSpec {
    pub fn el() -> Self {
        Self { kind: LossKind::El, decay_base: 1.0 }
    }

    pub fn etdl(decay_base: f64) -> Self {
        Self { kind: LossKind::Etdl, decay_base }
    }

    pub fn evaluate(&self, dataset: &Dataset, partition: &Partition, eta: &EtaFunction) -> f64 {
        match self.kind {
            LossKind::El => loss_el(dataset, partition, eta),
            LossKind::Etdl => loss_etdl(dataset, partition, eta, self.decay_base),
        }
    }
}

/// Per-region visit counts: how many recorded state samples land in each
/// region. Out-of-range samples (none in practice) are dropped.
pub fn visit_counts(dataset: &Dataset, partition: &Partition) -> Vec<u64> {
    let mut counts = alloc::vec![0u64; partition.num_regions()];
    for tr in &dataset.trajectories {
        for step in &tr.steps {
            if let Some(i) = partition.region_index_of(step.state.position) {
                counts[i] += 1;
            }
        }
    }
    counts
}

/// Visit-frequency weights `w_i`, summing to one over visited regions.
pub fn experience_weights(dataset: &Dataset, partition: &Partition) -> Vec<f64> {
    let counts = visit_counts(dataset, partition);
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .map(|c| if total == 0 { 0.0 } else { *c as f64 / total as f64 })
        .collect()
}

/// Experience loss: per-region bound weighted by visit frequency, summed
/// over every visit. A visited region with an infinite bound makes the
/// loss infinite; empty regions contribute nothing.
pub fn loss_el(dataset: &Dataset, partition: &Partition, eta: &EtaFunction) -> f64 {
    let counts = visit_counts(dataset, partition);
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let mut loss = 0.0;
    for (i, c) in counts.iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let w = *c as f64 / total as f64;
        loss += w * *c as f64 * eta.bounds[i];
    }
    loss
}

/// Experience time-decay loss: as [`loss_el`] but each visit at step `t`
/// weighted by `decay^t`.
pub fn loss_etdl(dataset: &Dataset, partition: &Partition, eta: &EtaFunction, decay: f64) -> f64 {
    let counts = visit_counts(dataset, partition);
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    // per-region sum of decay^t over visits
    let mut decayed = alloc::vec![0.0f64; partition.num_regions()];
    for tr in &dataset.trajectories {
        for step in &tr.steps {
            if let Some(i) = partition.region_index_of(step.state.position) {
                decayed[i] += libm::pow(decay, step.time as f64);
            }
        }
    }
    let mut loss = 0.0;
    for (i, c) in counts.iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let w = *c as f64 / total as f64;
        loss += w * decayed[i] * eta.bounds[i];
    }
    loss
}
