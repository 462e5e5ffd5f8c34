//! Acceptance suite: one test per acceptance criterion, each printing a
//! single `[criterion N] name: PASS|FAIL` line (run with `--nocapture` to
//! see the lines for passing tests).

use conreach_cli::stages::{self, report_path};
use conreach_cli::PipelineConfig;
use conreach_core::conformal::{
    conformal_quantile, fit_eta, fit_time_baseline, validate_coverage, BoundFunction,
};
use conreach_core::dynamics::{dynamics_step, dynamics_step_interval};
use conreach_core::interval::{BoxSet, Interval};
use conreach_core::noise::NoiseDistribution;
use conreach_core::optimize::{optimize_partition, OptimizerSpec};
use conreach_core::partition::{loss_el, loss_etdl, uniform_partition, LossSpec, Partition};
use conreach_core::reach::{compute_reach_tube, MergeStrategy, TubeStatus, VerifySpec};
use conreach_core::rng::{indexed_seed, rng_from_seed};
use conreach_core::sim::{generate_dataset, simulate};
use conreach_core::{
    Controller, Dataset, MlpController, MountainCarParams, NoiseProfile, State,
};
use rand::Rng;

fn verdict(n: u32, name: &str, pass: bool, details: String) {
    println!("[criterion {n}] {name}: {}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}): {details}");
}

fn defaults() -> (Controller, NoiseProfile, MountainCarParams) {
    (
        Controller::Mlp(MlpController::default_policy()),
        NoiseProfile::default_heteroskedastic(),
        MountainCarParams::default(),
    )
}

fn dataset(n: usize, seed: u64) -> Dataset {
    let (ctrl, profile, params) = defaults();
    generate_dataset(n, &Interval::new(-0.55, -0.45), &ctrl, &profile, &params, 90, seed).unwrap()
}

fn split(ds: &Dataset, at: usize) -> (Dataset, Dataset) {
    (
        Dataset { trajectories: ds.trajectories[..at].to_vec(), ..ds.clone() },
        Dataset { trajectories: ds.trajectories[at..].to_vec(), ..ds.clone() },
    )
}

#[test]
fn criterion_1_quantile_oracle() {
    let mut rng = rng_from_seed(1001);
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let n = rng.random_range(1..=500);
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0f64..10.0)).collect();
        let level = rng.random_range(0.001f64..0.999);
        let got = conformal_quantile(&scores, level).unwrap();
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = ((n as f64 + 1.0) * level).ceil() as usize;
        let want = if rank > n { f64::INFINITY } else { sorted[rank.max(1) - 1] };
        if got != want {
            mismatches += 1;
        }
    }
    verdict(1, "quantile matches rank oracle", mismatches == 0, format!("{mismatches} mismatches"));
}

#[test]
fn criterion_2_coverage_guarantee() {
    let alpha = 0.05;
    let cal = dataset(2000, 31);
    let test = dataset(2000, 32);
    let range = Interval::new(-1.2, 0.6);
    let mut results = Vec::new();
    for m in [1usize, 3, 5] {
        let eta = fit_eta(&cal, &uniform_partition(m, range), alpha);
        results.push((format!("uniform M={m}"), validate_coverage(&BoundFunction::State(eta), &test)));
    }
    let (reg, conf) = split(&cal, 500);
    let out = optimize_partition(
        &reg,
        &conf,
        3,
        &LossSpec::etdl(0.9),
        &OptimizerSpec::ga(7),
        alpha,
        range,
    )
    .unwrap();
    results.push(("GA+ETDL M=3".into(), validate_coverage(&BoundFunction::State(out.eta), &test)));
    let pass = results.iter().all(|(_, c)| *c >= 0.94);
    verdict(2, "held-out coverage at least 0.94", pass, format!("{results:?}"));
}

#[test]
fn criterion_3_reach_tube_soundness() {
    let (ctrl, profile, params) = defaults();
    let cal = dataset(2000, 31);
    let eta = fit_eta(&cal, &uniform_partition(3, Interval::new(-1.2, 0.6)), 0.05);
    let bound = BoundFunction::State(eta);
    let spec = VerifySpec::new(Interval::new(-0.51, -0.49), 50, 90);
    let tube = compute_reach_tube(&spec, &bound, &ctrl, &params).unwrap();
    assert_eq!(tube.status, TubeStatus::Complete);

    let n = 1000usize;
    let mut inside_count = 0usize;
    let mut conforming_escapes = 0usize;
    for i in 0..n {
        let mut rng = rng_from_seed(indexed_seed(40_000, i as u64));
        let p0 = rng.random_range(-0.51f64..=-0.49);
        let tr = simulate(State::new(p0, 0.0), &ctrl, &profile, &params, 90, &mut rng).unwrap();
        let inside = tr.steps.iter().all(|s| {
            tube.per_step[s.time as usize].hull.contains_point(s.state.position, s.state.velocity)
        });
        let conforming = tr.steps.iter().all(|s| {
            bound.at(&s.state, s.time).map(|b| s.perception_error() <= b).unwrap_or(false)
        });
        if inside {
            inside_count += 1;
        }
        if conforming && !inside {
            conforming_escapes += 1;
        }
    }
    let frac = inside_count as f64 / n as f64;
    let pass = frac >= 0.94 && conforming_escapes == 0;
    verdict(
        3,
        "fresh trajectories stay inside the tube",
        pass,
        format!("inside fraction {frac}, conforming escapes {conforming_escapes}"),
    );
}

#[test]
fn criterion_4_table_trend() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::default();
    config.out_dir = dir.path().to_path_buf();
    stages::run_all(&config).unwrap();
    let report: serde_json::Value =
        conreach_cli::json::read_json(&report_path(dir.path(), "json")).unwrap();
    let size = |name: &str| -> f64 {
        report["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["name"] == name)
            .and_then(|r| r["max_set_size"].as_f64())
            .unwrap_or(f64::NAN)
    };
    let optimized = size("ga_etdl_m5");
    let uniform1 = size("uniform_m1");
    let baseline = size("baseline");
    let pass = optimized < uniform1 && optimized < baseline;
    verdict(
        4,
        "optimized tube strictly tighter than uniform M=1 and baseline",
        pass,
        format!("ga_etdl_m5={optimized}, uniform_m1={uniform1}, baseline={baseline}"),
    );
}

#[test]
fn criterion_5_merge_equivalence() {
    let (ctrl, _, params) = defaults();
    let cal = dataset(150, 3);
    let mut rng = rng_from_seed(555);
    let mut failures = Vec::new();
    for trial in 0..5 {
        let m = rng.random_range(2..=4);
        let eta = fit_eta(&cal, &uniform_partition(m, Interval::new(-1.2, 0.6)), 0.05);
        let bound = BoundFunction::State(eta);
        let lo = rng.random_range(-0.53f64..-0.50);
        // NoMerge keeps every branch alive, so the horizon stays modest to
        // bound its exponential branch growth.
        let mut spec =
            VerifySpec::new(Interval::new(lo, lo + rng.random_range(0.005f64..0.02)), rng.random_range(2..=6), 60);
        spec.normalize_period = rng.random_range(1..=5);
        spec.greedy_threshold = rng.random_range(2..=8);
        let tube = |strategy| {
            let mut s = spec;
            s.merge_strategy = strategy;
            compute_reach_tube(&s, &bound, &ctrl, &params).unwrap()
        };
        let no_merge = tube(MergeStrategy::NoMerge);
        let opp = tube(MergeStrategy::OppMerge);
        let greedy = tube(MergeStrategy::GreedyMerge);
        let hulls_equal = no_merge.per_step.iter().zip(&opp.per_step).all(|(a, b)| {
            (a.hull.position.lo - b.hull.position.lo).abs() <= 1e-12
                && (a.hull.position.hi - b.hull.position.hi).abs() <= 1e-12
                && (a.hull.velocity.lo - b.hull.velocity.lo).abs() <= 1e-12
                && (a.hull.velocity.hi - b.hull.velocity.hi).abs() <= 1e-12
        });
        if !hulls_equal {
            failures.push(format!("trial {trial}: opp hull differs from no-merge"));
        }
        if opp.metrics.total_branches > no_merge.metrics.total_branches {
            failures.push(format!("trial {trial}: opp branch count exceeds no-merge"));
        }
        if !greedy.per_step.iter().zip(&opp.per_step).all(|(g, o)| g.hull.contains(&o.hull)) {
            failures.push(format!("trial {trial}: greedy hull does not contain opp hull"));
        }
    }
    verdict(5, "merge strategies equivalent/dominating", failures.is_empty(), failures.join("; "));
}

#[test]
fn criterion_6_interval_soundness_fuzz() {
    let params = MountainCarParams::default();
    let controllers = [
        Controller::Mlp(MlpController::default_policy()),
        Controller::Energy(conreach_core::EnergyController { thrust: 1.0 }),
    ];
    let mut rng = rng_from_seed(666);
    let mut escapes = 0usize;
    let trials = 100_000usize;
    fn iv<R: Rng>(lo: f64, hi: f64, w: f64, rng: &mut R) -> Interval {
        let a = rng.random_range(lo..hi);
        Interval::new(a, a + rng.random_range(0.0..w))
    }
    for _ in 0..trials {
        // interval_add / scale / cos
        let a = iv(-5.0, 5.0, 2.0, &mut rng);
        let b = iv(-5.0, 5.0, 2.0, &mut rng);
        let x = rng.random_range(a.lo..=a.hi);
        let y = rng.random_range(b.lo..=b.hi);
        let k = rng.random_range(-3.0f64..3.0);
        if !a.add(&b).contains(x + y) || !a.scale(k).contains(k * x) || !a.cos().contains(x.cos())
        {
            escapes += 1;
            continue;
        }
        // dynamics_step_interval
        let pos = iv(-1.2, 0.55, 0.05, &mut rng);
        let vel = iv(-0.07, 0.065, 0.005, &mut rng);
        let u_iv = iv(-1.0, 0.9, 0.1, &mut rng);
        let p = rng.random_range(pos.lo..=pos.hi);
        let v = rng.random_range(vel.lo..=vel.hi);
        let u = rng.random_range(u_iv.lo..=u_iv.hi).clamp(-1.0, 1.0);
        let boxed = dynamics_step_interval(&BoxSet::new(pos, vel), &u_iv, &params);
        let scalar = dynamics_step(&State::new(p, v), u, &params).unwrap();
        if !boxed.contains_point(scalar.position, scalar.velocity) {
            escapes += 1;
            continue;
        }
        // controller_eval_interval
        let y_iv = iv(-1.4, 0.7, 0.3, &mut rng);
        let ys = rng.random_range(y_iv.lo..=y_iv.hi);
        for ctrl in &controllers {
            let out = ctrl.eval_interval(&y_iv, &vel).unwrap();
            let s = ctrl.eval(ys, v).unwrap();
            if !out.contains(s) {
                escapes += 1;
            }
        }
    }
    verdict(6, "interval operations never escape", escapes == 0, format!("{escapes} escapes"));
}

#[test]
fn criterion_7_optimizer_sanity() {
    let params = MountainCarParams::default();
    let ctrl = Controller::Mlp(MlpController::default_policy());
    let profile = NoiseProfile {
        breakpoints: vec![(-1.2, 0.05), (-0.3001, 0.05), (-0.3, 0.007), (0.6, 0.007)],
        distribution: NoiseDistribution::Uniform,
    };
    let init = Interval::new(-0.55, -0.45);
    let reg = generate_dataset(100, &init, &ctrl, &profile, &params, 90, 701).unwrap();
    let conf = generate_dataset(300, &init, &ctrl, &profile, &params, 90, 702).unwrap();
    let range = Interval::new(-1.2, 0.6);
    let loss = LossSpec::el();

    // brute-force sweep over the single edge
    let mut best = (f64::INFINITY, 0.0f64);
    let mut edge = range.lo + 0.005;
    while edge < range.hi - 0.0049 {
        let p = Partition::new(vec![edge], range);
        let l = loss.evaluate(&reg, &p, &fit_eta(&conf, &p, 0.05));
        if l < best.0 {
            best = (l, edge);
        }
        edge += 0.005;
    }
    let target = best.1;

    let mut failures = Vec::new();
    for mut opt in [OptimizerSpec::ga(9), OptimizerSpec::sa(9)] {
        opt.budget = 500;
        let out = optimize_partition(&reg, &conf, 2, &loss, &opt, 0.05, range).unwrap();
        let e = out.partition.edges[0];
        if (e - target).abs() > 0.05 {
            failures.push(format!("{:?}: edge {e} vs sweep optimum {target}", opt.kind));
        }
        if !out.history.windows(2).all(|w| w[1] <= w[0]) {
            failures.push(format!("{:?}: history not non-increasing", opt.kind));
        }
    }
    verdict(
        7,
        "GA/SA find the noise step within 0.05",
        failures.is_empty(),
        format!("target {target}: {}", failures.join("; ")),
    );
}

#[test]
fn criterion_8_etdl_el_identity() {
    let range = Interval::new(-1.2, 0.6);
    let mut rng = rng_from_seed(888);
    let mut mismatches = 0usize;
    for trial in 0..100u64 {
        let ds = dataset(6, 9000 + trial);
        let m = rng.random_range(1..=5);
        let mut edges: Vec<f64> = (0..m - 1).map(|_| rng.random_range(-1.15f64..0.55)).collect();
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();
        let p = Partition::new(edges, range);
        let eta = fit_eta(&ds, &p, 0.05);
        let el = loss_el(&ds, &p, &eta);
        let etdl = loss_etdl(&ds, &p, &eta, 1.0);
        if el.to_bits() != etdl.to_bits() {
            mismatches += 1;
        }
    }
    verdict(8, "ETDL with decay 1 equals EL exactly", mismatches == 0, format!("{mismatches} mismatches"));
}

#[test]
fn criterion_9_pipeline_determinism() {
    let mut digests = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let mut config = PipelineConfig::default();
        config.out_dir = dir.path().to_path_buf();
        stages::run_all(&config).unwrap();
        let report: serde_json::Value =
            conreach_cli::json::read_json(&report_path(dir.path(), "json")).unwrap();
        digests.push(report["digest"].as_str().unwrap().to_string());
    }
    verdict(
        9,
        "identical seeds give identical report digests",
        digests[0] == digests[1],
        format!("{} vs {}", digests[0], digests[1]),
    );
}

#[test]
fn baseline_bound_has_horizon_plus_one_steps() {
    // shape check backing the calibrate stage's baseline artifact
    let cal = dataset(300, 21);
    let (a, c) = split(&cal, 50);
    let tb = fit_time_baseline(&a, &c, 0.05, 90).unwrap();
    assert_eq!(tb.per_step_bounds.len(), 91);
}
