//! Optimizer behavior: determinism, history monotonicity, and agreement
//! with a brute-force sweep on a one-edge problem.

use conreach_core::conformal::fit_eta;
use conreach_core::noise::NoiseDistribution;
use conreach_core::optimize::{optimize_partition, OptimizerSpec};
use conreach_core::partition::{LossSpec, Partition};
use conreach_core::sim::generate_dataset;
use conreach_core::{
    Controller, Dataset, Interval, MlpController, MountainCarParams, NoiseProfile,
};

fn step_profile() -> NoiseProfile {
    // sharp noise-amplitude step at p = -0.3
    NoiseProfile {
        breakpoints: vec![(-1.2, 0.05), (-0.3001, 0.05), (-0.3, 0.007), (0.6, 0.007)],
        distribution: NoiseDistribution::Uniform,
    }
}

fn step_datasets() -> (Dataset, Dataset) {
    let params = MountainCarParams::default();
    let ctrl = Controller::Mlp(MlpController::default_policy());
    let profile = step_profile();
    let init = Interval::new(-0.55, -0.45);
    let reg = generate_dataset(60, &init, &ctrl, &profile, &params, 90, 501).unwrap();
    let conf = generate_dataset(200, &init, &ctrl, &profile, &params, 90, 502).unwrap();
    (reg, conf)
}

/// Brute-force loss sweep over single-edge partitions.
fn sweep_optimum(reg: &Dataset, conf: &Dataset, loss: &LossSpec, range: Interval) -> f64 {
    let mut best = (f64::INFINITY, range.midpoint());
    let mut edge = range.lo + 0.005;
    while edge < range.hi - 0.0049 {
        let p = Partition::new(vec![edge], range);
        let eta = fit_eta(conf, &p, 0.05);
        let l = loss.evaluate(reg, &p, &eta);
        if l < best.0 {
            best = (l, edge);
        }
        edge += 0.005;
    }
    best.1
}

#[test]
fn ga_and_sa_find_the_noise_step() {
    let (reg, conf) = step_datasets();
    let range = Interval::new(-1.2, 0.6);
    let loss = LossSpec::el();
    let target = sweep_optimum(&reg, &conf, &loss, range);
    for opt in [OptimizerSpec::ga(9), OptimizerSpec::sa(9)] {
        let mut opt = opt;
        opt.budget = 500;
        let out = optimize_partition(&reg, &conf, 2, &loss, &opt, 0.05, range).unwrap();
        let edge = out.partition.edges[0];
        assert!(
            (edge - target).abs() <= 0.05,
            "{:?}: edge {edge} not within 0.05 of sweep optimum {target}",
            opt.kind
        );
        assert!(
            out.history.windows(2).all(|w| w[1] <= w[0]),
            "{:?}: best-so-far history increased",
            opt.kind
        );
        assert_eq!(out.history.len(), 500);
        assert!(!out.warning_infinite_loss);
    }
}

#[test]
fn same_seed_reproduces_the_search_exactly() {
    let (reg, conf) = step_datasets();
    let range = Interval::new(-1.2, 0.6);
    let loss = LossSpec::etdl(0.9);
    for make in [OptimizerSpec::ga as fn(u64) -> OptimizerSpec, OptimizerSpec::sa] {
        let mut a = make(42);
        a.budget = 200;
        let out1 = optimize_partition(&reg, &conf, 3, &loss, &a, 0.05, range).unwrap();
        let out2 = optimize_partition(&reg, &conf, 3, &loss, &a, 0.05, range).unwrap();
        assert_eq!(out1.partition.edges, out2.partition.edges);
        assert_eq!(out1.loss.to_bits(), out2.loss.to_bits());
        assert_eq!(out1.history, out2.history);

        let mut b = make(43);
        b.budget = 200;
        let out3 = optimize_partition(&reg, &conf, 3, &loss, &b, 0.05, range).unwrap();
        assert_ne!(
            out1.history, out3.history,
            "different seeds should explore differently"
        );
    }
}

#[test]
fn single_region_skips_the_search() {
    let (reg, conf) = step_datasets();
    let range = Interval::new(-1.2, 0.6);
    let out = optimize_partition(&reg, &conf, 1, &LossSpec::el(), &OptimizerSpec::ga(1), 0.05, range)
        .unwrap();
    assert!(out.partition.edges.is_empty());
    assert_eq!(out.history.len(), 1);
}

#[test]
fn optimized_loss_beats_or_matches_uniform() {
    let (reg, conf) = step_datasets();
    let range = Interval::new(-1.2, 0.6);
    let loss = LossSpec::el();
    let mut opt = OptimizerSpec::ga(5);
    opt.budget = 400;
    for m in [2usize, 3] {
        let out = optimize_partition(&reg, &conf, m, &loss, &opt, 0.05, range).unwrap();
        let uniform = conreach_core::partition::uniform_partition(m, range);
        let uniform_loss = loss.evaluate(&reg, &uniform, &fit_eta(&conf, &uniform, 0.05));
        assert!(
            out.loss <= uniform_loss + 1e-12,
            "M={m}: optimized loss {} worse than uniform {uniform_loss}",
            out.loss
        );
    }
}
