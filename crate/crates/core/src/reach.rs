//! Sound discrete-time box flowpipes for the closed loop with regional
//! (or per-step) measurement inflation, including branch splitting at
//! region boundaries and the three branch-merge strategies.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::conformal::BoundFunction;
use crate::controller::Controller;
use crate::dynamics::{dynamics_step_interval, MountainCarParams};
use crate::interval::{BoxSet, Interval};
use crate::partition::Partition;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeStrategy {
    NoMerge,
    OppMerge,
    GreedyMerge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchStatus {
    Active,
    MergedInto(u64),
    Infeasible,
}

/// One piece of the reach set, confined to a single region.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: u64,
    pub set: BoxSet,
    pub region: usize,
    pub created_at: u32,
    pub status: BranchStatus,
}

/// Marks a branch at a normalization checkpoint. Boxes are already in
/// normal form, so the set itself is unchanged; the checkpoint is the
/// moment the opportunistic merge scan runs.
pub fn normalize_branch(branch: Branch) -> Branch {
    branch
}

/// True when step `k` is a normalization checkpoint.
pub fn is_checkpoint(k: u32, normalize_period: u32) -> bool {
    normalize_period > 0 && k % normalize_period.max(1) == 0
}

/// How to run one verification: initial set, subdivision count, horizon,
/// merge behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifySpec {
    /// Initial position set; initial velocity is the point 0.
    pub initial_set: Interval,
    pub subdivisions: usize,
    pub horizon: u32,
    pub merge_strategy: MergeStrategy,
    /// Steps between merge checkpoints (the shrink-wrap analog).
    pub normalize_period: u32,
    /// GreedyMerge: hull-collapse a region once it holds more than this
    /// many active branches.
    pub greedy_threshold: usize,
}

impl VerifySpec {
    pub fn new(initial_set: Interval, subdivisions: usize, horizon: u32) -> Self {
        Self {
            initial_set,
            subdivisions,
            horizon,
            merge_strategy: MergeStrategy::OppMerge,
            normalize_period: 5,
            greedy_threshold: 8,
        }
    }
}

/// Split a box at the region edges of `partition`. Returns the nonempty
/// `(region, piece)` intersections; pieces abut at shared edges and cover
/// the box's intersection with the range.
pub fn split_by_regions(set: &BoxSet, partition: &Partition) -> Vec<(usize, BoxSet)> {
    let mut pieces = Vec::new();
    for i in 0..partition.num_regions() {
        let region = partition.region_interval(i);
        if let Some(pos) = set.position.intersect(&region) {
            // degenerate slivers at a shared left edge belong to the
            // right-hand region (half-open membership)
            if pos.width() == 0.0 && i + 1 < partition.num_regions() && pos.lo == region.hi {
                continue;
            }
            if pos.width() == 0.0 && i > 0 && pos.lo == region.lo && set.position.width() > 0.0 {
                continue;
            }
            pieces.push((i, BoxSet::new(pos, set.velocity)));
        }
    }
    pieces
}

/// Per-step record of the union of all branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub hull: BoxSet,
    pub n_branches: usize,
    pub pos_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TubeStatus {
    Complete,
    /// The bound was infinite in `region` while a branch occupied it.
    Infeasible { step: u32, region: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachMetrics {
    /// Max over steps of the position hull width.
    pub max_set_size: f64,
    /// Branches created across all sub-intervals and steps.
    pub total_branches: u64,
    /// Filled in by the caller; the core is clock-free.
    pub wall_time_secs: f64,
}

/// The verified tube: per-step hulls over every branch of every
/// sub-interval, plus summary metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachTube {
    pub per_step: Vec<StepRecord>,
    pub metrics: ReachMetrics,
    pub merge_strategy: MergeStrategy,
    pub status: TubeStatus,
}

/// Flowpipe of a single initial sub-box: per-step branch boxes plus the
/// full branch log for auditing.
#[derive(Debug, Clone)]
pub struct SubFlowpipe {
    pub per_step: Vec<Vec<BoxSet>>,
    pub branches: Vec<Branch>,
    pub infeasible: Option<(u32, usize)>,
}

struct Stepper<'a> {
    spec: &'a VerifySpec,
    bound: &'a BoundFunction,
    ctrl: &'a Controller,
    params: &'a MountainCarParams,
}

impl<'a> Stepper<'a> {
    fn partition(&self) -> Option<&Partition> {
        match self.bound {
            BoundFunction::State(eta) => Some(&eta.partition),
            BoundFunction::Time(_) => None,
        }
    }

    fn bound_for(&self, branch: &Branch, k: u32) -> f64 {
        match self.bound {
            BoundFunction::State(eta) => eta.bounds[branch.region],
            BoundFunction::Time(tb) => tb.per_step_bounds[k as usize],
        }
    }

    /// Advance one branch by one step: inflate the measurement with the
    /// branch's regional bound, enclose the control, push the box through
    /// the interval dynamics, and split the successor at region edges.
    fn step_branch(
        &self,
        branch: &Branch,
        k: u32,
        next_id: &mut u64,
    ) -> Result<Vec<Branch>> {
        let e = self.bound_for(branch, k);
        debug_assert!(e.is_finite());
        let measurement = branch.set.position.add(&Interval::new(-e, e));
        let control = self.ctrl.eval_interval(&measurement, &branch.set.velocity)?;
        let successor = dynamics_step_interval(&branch.set, &control, self.params);
        let pieces = match self.partition() {
            Some(p) => split_by_regions(&successor, p),
            None => alloc::vec![(0usize, successor)],
        };
        Ok(pieces
            .into_iter()
            .map(|(region, set)| {
                let id = *next_id;
                *next_id += 1;
                Branch { id, set, region, created_at: k + 1, status: BranchStatus::Active }
            })
            .collect())
    }

    /// Apply the merge strategy to the active set at one step.
    fn merge(&self, active: &mut Vec<Branch>, log: &mut Vec<Branch>, k: u32, next_id: &mut u64) {
        match self.spec.merge_strategy {
            MergeStrategy::NoMerge => {}
            MergeStrategy::OppMerge | MergeStrategy::GreedyMerge => {
                if is_checkpoint(k, self.spec.normalize_period) {
                    opp_scan(active, log);
                }
                if self.spec.merge_strategy == MergeStrategy::GreedyMerge {
                    greedy_collapse(active, log, k, next_id, self.spec.greedy_threshold);
                }
            }
        }
    }
}

/// Drop active branches whose box is contained in another active branch
/// of the same region; the dropped branch records its container. Equal
/// boxes keep the earlier branch.
fn opp_scan(active: &mut Vec<Branch>, log: &mut Vec<Branch>) {
    let n = active.len();
    let mut merged_into: Vec<Option<u64>> = alloc::vec![None; n];
    for i in 0..n {
        if merged_into[i].is_some() {
            continue;
        }
        for j in 0..n {
            if i == j || merged_into[j].is_some() {
                continue;
            }
            let (vic, con) = (&active[i], &active[j]);
            if con.region != vic.region || !con.set.contains(&vic.set) {
                continue;
            }
            // equal boxes: only the later one yields
            if vic.set.contains(&con.set) && i < j {
                continue;
            }
            merged_into[i] = Some(con.id);
            break;
        }
    }
    let mut idx = 0;
    let mut kept: Vec<Branch> = Vec::with_capacity(n);
    for branch in active.drain(..) {
        match merged_into[idx] {
            Some(container) => {
                let mut merged = branch;
                merged.status = BranchStatus::MergedInto(container);
                log.push(merged);
            }
            None => kept.push(branch),
        }
        idx += 1;
    }
    *active = kept;
}

/// Replace the branches of any over-full region with their bounding hull.
fn greedy_collapse(
    active: &mut Vec<Branch>,
    log: &mut Vec<Branch>,
    k: u32,
    next_id: &mut u64,
    threshold: usize,
) {
    if threshold == 0 {
        return;
    }
    let max_region = active.iter().map(|b| b.region).max().unwrap_or(0);
    for region in 0..=max_region {
        let count = active.iter().filter(|b| b.region == region).count();
        if count <= threshold {
            continue;
        }
        let mut hull: Option<BoxSet> = None;
        for b in active.iter().filter(|b| b.region == region) {
            hull = Some(match hull {
                None => b.set,
                Some(h) => h.hull(&b.set),
            });
        }
        let hull = hull.expect("region nonempty");
        let id = *next_id;
        *next_id += 1;
        let replacement =
            Branch { id, set: hull, region, created_at: k, status: BranchStatus::Active };
        let mut i = 0;
        while i < active.len() {
            if active[i].region == region {
                let mut merged = active.remove(i);
                merged.status = BranchStatus::MergedInto(id);
                log.push(merged);
            } else {
                i += 1;
            }
        }
        active.push(replacement);
    }
}

/// Run the branch stepper for one initial sub-box.
pub fn run_subinterval(
    initial: BoxSet,
    spec: &VerifySpec,
    bound: &BoundFunction,
    ctrl: &Controller,
    params: &MountainCarParams,
) -> Result<SubFlowpipe> {
    let stepper = Stepper { spec, bound, ctrl, params };
    let mut next_id = 0u64;
    let mut log: Vec<Branch> = Vec::new();
    let mut active: Vec<Branch> = match stepper.partition() {
        Some(p) => {
            let pieces = split_by_regions(&initial, p);
            if pieces.is_empty() {
                return Err(Error::InvalidInput("initial set outside the partitioned range"));
            }
            pieces
                .into_iter()
                .map(|(region, set)| {
                    let id = next_id;
                    next_id += 1;
                    Branch { id, set, region, created_at: 0, status: BranchStatus::Active }
                })
                .collect()
        }
        None => {
            let id = next_id;
            next_id += 1;
            alloc::vec![Branch {
                id,
                set: initial,
                region: 0,
                created_at: 0,
                status: BranchStatus::Active,
            }]
        }
    };
    let mut per_step: Vec<Vec<BoxSet>> = Vec::with_capacity(spec.horizon as usize + 1);
    per_step.push(active.iter().map(|b| b.set).collect());
    let mut infeasible = None;
    for k in 0..spec.horizon {
        if let Some(bad_idx) =
            active.iter().position(|b| !stepper.bound_for(b, k).is_finite())
        {
            let mut bad = active.remove(bad_idx);
            infeasible = Some((k, bad.region));
            bad.status = BranchStatus::Infeasible;
            log.push(bad);
            break;
        }
        let mut next_active: Vec<Branch> = Vec::with_capacity(active.len());
        for branch in core::mem::take(&mut active) {
            let children = stepper.step_branch(&branch, k, &mut next_id)?;
            log.push(branch);
            next_active.extend(children);
        }
        active = next_active;
        stepper.merge(&mut active, &mut log, k + 1, &mut next_id);
        per_step.push(active.iter().map(|b| b.set).collect());
    }
    log.extend(active.drain(..));
    Ok(SubFlowpipe { per_step, branches: log, infeasible })
}

/// Verify the full initial set: subdivide it, run each sub-box through
/// the stepper, and union per-step hulls. `wall_time_secs` is left at 0
/// for the caller to fill.
pub fn compute_reach_tube(
    spec: &VerifySpec,
    bound: &BoundFunction,
    ctrl: &Controller,
    params: &MountainCarParams,
) -> Result<ReachTube> {
    if spec.subdivisions == 0 {
        return Err(Error::InvalidInput("need at least one subdivision"));
    }
    let n = spec.subdivisions;
    let width = spec.initial_set.width() / n as f64;
    let mut hulls: Vec<Option<(BoxSet, usize)>> = alloc::vec![None; spec.horizon as usize + 1];
    let mut total_branches = 0u64;
    let mut status = TubeStatus::Complete;
    let mut truncate_at = spec.horizon as usize;
    for i in 0..n {
        let lo = spec.initial_set.lo + width * i as f64;
        let hi = if i + 1 == n { spec.initial_set.hi } else { lo + width };
        let sub = BoxSet::new(Interval::new(lo, hi), Interval::point(0.0));
        let pipe = run_subinterval(sub, spec, bound, ctrl, params)?;
        total_branches += pipe.branches.len() as u64;
        if let Some((k, region)) = pipe.infeasible {
            status = TubeStatus::Infeasible { step: k, region };
            truncate_at = truncate_at.min(k as usize);
        }
        for (k, boxes) in pipe.per_step.iter().enumerate() {
            for b in boxes {
                let slot = &mut hulls[k];
                *slot = Some(match slot.take() {
                    None => (*b, 1),
                    Some((h, c)) => (h.hull(b), c + 1),
                });
            }
        }
    }
    let per_step: Vec<StepRecord> = hulls
        .into_iter()
        .enumerate()
        .take_while(|(k, slot)| *k <= truncate_at && slot.is_some())
        .map(|(k, slot)| {
            let (hull, n_branches) = slot.expect("filtered");
            StepRecord { step: k as u32, pos_width: hull.position.width(), hull, n_branches }
        })
        .collect();
    let max_set_size = per_step.iter().map(|r| r.pos_width).fold(0.0, f64::max);
    Ok(ReachTube {
        per_step,
        metrics: ReachMetrics { max_set_size, total_branches, wall_time_secs: 0.0 },
        merge_strategy: spec.merge_strategy,
        status,
    })
}

/// Flat per-step summary for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachReport {
    pub max_set_size: f64,
    pub per_step_sizes: Vec<f64>,
    pub branch_counts: Vec<usize>,
    pub wall_time_secs: f64,
    pub merge_strategy: MergeStrategy,
}

pub fn reach_metrics(tube: &ReachTube) -> ReachReport {
    ReachReport {
        max_set_size: tube.metrics.max_set_size,
        per_step_sizes: tube.per_step.iter().map(|r| r.pos_width).collect(),
        branch_counts: tube.per_step.iter().map(|r| r.n_branches).collect(),
        wall_time_secs: tube.metrics.wall_time_secs,
        merge_strategy: tube.merge_strategy,
    }
}
