//! On-disk artifact schemas and their conversions to core types.
//!
//! All files are JSON in the canonical format of [`crate::json`]. Infinite
//! bounds (unvisited regions) are stored as `null`.

use conreach_core::conformal::{BoundFunction, EtaFunction, TimeBoundFunction};
use conreach_core::optimize::OptimizerKind;
use conreach_core::partition::{LossKind, Partition};
use conreach_core::reach::{MergeStrategy, ReachMetrics, StepRecord, TubeStatus};
use conreach_core::{BoxSet, Dataset, Interval, State, Step, Trajectory};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

// ---------------------------------------------------------------------------
// Datasets

/// One recorded step: time, position, velocity, measurement, control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub t: u32,
    pub p: f64,
    pub v: f64,
    pub y: f64,
    pub u: f64,
}

/// Dataset artifact: the contract between the generate and calibrate stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub horizon: u32,
    pub seed: u64,
    pub trajectories: Vec<Vec<StepRow>>,
}

impl DatasetFile {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let trajectories = ds
            .trajectories
            .iter()
            .map(|tr| {
                tr.steps
                    .iter()
                    .map(|s| StepRow {
                        t: s.time,
                        p: s.state.position,
                        v: s.state.velocity,
                        y: s.measurement,
                        u: s.control,
                    })
                    .collect()
            })
            .collect();
        Self { horizon: ds.horizon, seed: ds.seed, trajectories }
    }

    /// Rebuild the core dataset. Goal termination is recovered from the last
    /// recorded position, so the caller supplies the goal threshold.
    pub fn into_dataset(self, goal_position: f64) -> Dataset {
        let trajectories = self
            .trajectories
            .into_iter()
            .map(|rows| {
                let terminated_at_goal =
                    rows.last().is_some_and(|s| s.p >= goal_position);
                Trajectory {
                    steps: rows
                        .into_iter()
                        .map(|r| Step {
                            time: r.t,
                            state: State::new(r.p, r.v),
                            measurement: r.y,
                            control: r.u,
                        })
                        .collect(),
                    terminated_at_goal,
                }
            })
            .collect();
        Dataset { trajectories, horizon: self.horizon, seed: self.seed }
    }
}

// ---------------------------------------------------------------------------
// Bound identities

/// One calibrated bound in the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Uniform { m: usize },
    Optimized { optimizer: OptimizerKind, loss: LossKind, m: usize },
    Baseline,
}

pub fn optimizer_name(o: OptimizerKind) -> &'static str {
    match o {
        OptimizerKind::Ga => "ga",
        OptimizerKind::Sa => "sa",
    }
}

pub fn loss_name(l: LossKind) -> &'static str {
    match l {
        LossKind::El => "el",
        LossKind::Etdl => "etdl",
    }
}

impl Method {
    /// File stem shared by the bound and tube artifacts of this method.
    pub fn stem(&self) -> String {
        match self {
            Method::Uniform { m } => format!("uniform_m{m}"),
            Method::Optimized { optimizer, loss, m } => {
                format!("{}_{}_m{m}", optimizer_name(*optimizer), loss_name(*loss))
            }
            Method::Baseline => "baseline".into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Bounds

/// An axis-aligned region of the state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBox {
    pub p: [f64; 2],
    pub v: [f64; 2],
}

impl RegionBox {
    pub fn from_box(b: &BoxSet) -> Self {
        Self { p: [b.position.lo, b.position.hi], v: [b.velocity.lo, b.velocity.hi] }
    }
}

/// Optimizer provenance recorded alongside an optimized bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRecord {
    pub optimizer: String,
    pub loss: String,
    pub seed: u64,
    pub budget: usize,
    /// Best-so-far loss after each evaluation; non-increasing. `null`
    /// encodes an infinite loss (a visited region with no data yet).
    pub loss_history: Vec<Option<f64>>,
}

/// A fitted bound function: `kind = "state"` carries a partition with one
/// bound per region; `kind = "time"` carries one bound per step 0..=T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFile {
    #[serde(rename = "type")]
    pub kind: String,
    pub alpha: f64,
    pub method: String,
    pub m: Option<usize>,
    /// Region boxes for state bounds; `None` for the time baseline.
    pub partition: Option<Vec<RegionBox>>,
    /// Interior region edges (redundant with `partition`, kept for plotting).
    pub edges: Option<Vec<f64>>,
    /// Per-region or per-step bounds; `null` encodes an infinite bound.
    pub bounds: Vec<Option<f64>>,
    pub optimizer: Option<OptimizerRecord>,
    /// Loss of the final partition on the region-fitting split.
    pub loss_value: Option<f64>,
    /// Empirical trajectory-wide coverage on the held-out test split.
    pub coverage_on_test: f64,
    pub config_digest: String,
}

fn encode_bound(b: f64) -> Option<f64> {
    b.is_finite().then_some(b)
}

fn decode_bound(b: Option<f64>) -> f64 {
    b.unwrap_or(f64::INFINITY)
}

impl BoundFile {
    pub fn bounds_from(values: &[f64]) -> Vec<Option<f64>> {
        values.iter().map(|&b| encode_bound(b)).collect()
    }

    /// Rebuild the core bound function this artifact serializes.
    pub fn to_bound_function(&self, velocity_bounds: &Interval) -> Result<BoundFunction> {
        let bounds: Vec<f64> = self.bounds.iter().map(|&b| decode_bound(b)).collect();
        match self.kind.as_str() {
            "state" => {
                let boxes = self.partition.as_ref().ok_or_else(|| {
                    CliError::Io("state bound artifact is missing its partition".into())
                })?;
                if boxes.len() != bounds.len() || boxes.is_empty() {
                    return Err(CliError::Io(
                        "state bound artifact has mismatched partition/bounds lengths".into(),
                    ));
                }
                let range = Interval::new(boxes[0].p[0], boxes[boxes.len() - 1].p[1]);
                let edges = boxes[1..].iter().map(|b| b.p[0]).collect();
                let _ = velocity_bounds; // regions span the full velocity range
                let partition = Partition::new(edges, range);
                Ok(BoundFunction::State(EtaFunction { partition, bounds, alpha: self.alpha }))
            }
            "time" => Ok(BoundFunction::Time(TimeBoundFunction {
                per_step_bounds: bounds,
                alpha: self.alpha,
            })),
            other => Err(CliError::Io(format!("unknown bound type '{other}'"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Tubes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeStepRow {
    pub k: u32,
    pub hull: RegionBox,
    pub n_branches: usize,
    pub pos_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeFile {
    /// Stem of the bound artifact this tube was verified against.
    pub bound: String,
    pub merge_strategy: MergeStrategy,
    pub subdivisions: usize,
    pub initial_set: [f64; 2],
    pub status: TubeStatus,
    pub per_step: Vec<TubeStepRow>,
    pub metrics: ReachMetrics,
    pub config_digest: String,
}

impl TubeFile {
    pub fn step_rows(per_step: &[StepRecord]) -> Vec<TubeStepRow> {
        per_step
            .iter()
            .map(|r| TubeStepRow {
                k: r.step,
                hull: RegionBox::from_box(&r.hull),
                n_branches: r.n_branches,
                pos_width: r.pos_width,
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Artifact stem, e.g. `ga_etdl_m5`.
    pub name: String,
    /// `uniform`, `ga`, `sa`, or `baseline`.
    pub method: String,
    pub loss: Option<String>,
    pub m: Option<usize>,
    pub coverage_on_test: f64,
    pub loss_value: Option<f64>,
    pub max_set_size: Option<f64>,
    pub tube_status: Option<String>,
    pub wall_time_secs: Option<f64>,
    pub edges: Option<Vec<f64>>,
    pub bounds: Option<Vec<Option<f64>>>,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub toolkit_version: String,
    pub master_seed: u64,
    pub config_digest: String,
    pub alpha: f64,
    pub rows: Vec<ReportRow>,
    /// SHA-256 of the report with wall times zeroed and this field empty;
    /// identical runs produce identical digests.
    pub digest: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_file_round_trips() {
        let ds = Dataset {
            trajectories: vec![Trajectory {
                steps: vec![Step {
                    time: 0,
                    state: State::new(0.5, 0.01),
                    measurement: 0.48,
                    control: 1.0,
                }],
                terminated_at_goal: true,
            }],
            horizon: 90,
            seed: 9,
        };
        let back = DatasetFile::from_dataset(&ds).into_dataset(0.45);
        assert_eq!(ds, back);
    }

    #[test]
    fn state_bound_round_trips() {
        let partition = Partition::new(vec![-0.3], Interval::new(-1.2, 0.6));
        let vb = Interval::new(-0.07, 0.07);
        let file = BoundFile {
            kind: "state".into(),
            alpha: 0.05,
            method: "uniform".into(),
            m: Some(2),
            partition: Some(
                (0..2).map(|i| RegionBox::from_box(&partition.region_box(i, &vb))).collect(),
            ),
            edges: Some(partition.edges.clone()),
            bounds: BoundFile::bounds_from(&[0.1, f64::INFINITY]),
            optimizer: None,
            loss_value: None,
            coverage_on_test: 0.95,
            config_digest: String::new(),
        };
        match file.to_bound_function(&vb).unwrap() {
            BoundFunction::State(eta) => {
                assert_eq!(eta.partition, partition);
                assert_eq!(eta.bounds, vec![0.1, f64::INFINITY]);
            }
            _ => panic!("expected a state bound"),
        }
    }

    #[test]
    fn method_stems() {
        assert_eq!(Method::Uniform { m: 3 }.stem(), "uniform_m3");
        assert_eq!(
            Method::Optimized { optimizer: OptimizerKind::Ga, loss: LossKind::Etdl, m: 5 }.stem(),
            "ga_etdl_m5"
        );
        assert_eq!(Method::Baseline.stem(), "baseline");
    }
}
