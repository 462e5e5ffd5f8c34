//! The four pipeline stages: generate, calibrate, verify, report.
//!
//! Each stage is file-mediated and idempotent: it reads the artifacts of
//! the previous stage from the output directory and atomically writes its
//! own, so partial reruns are cheap.

use std::path::{Path, PathBuf};
use std::time::Instant;

use conreach_core::conformal::{fit_eta, fit_time_baseline, validate_coverage, BoundFunction};
use conreach_core::optimize::{optimize_partition, OptimizerKind, OptimizerSpec};
use conreach_core::partition::{uniform_partition, LossKind, LossSpec};
use conreach_core::reach::{compute_reach_tube, TubeStatus, VerifySpec};
use conreach_core::rng::substream_seed;
use conreach_core::sim::generate_dataset;
use conreach_core::Dataset;

use crate::artifacts::{
    loss_name, optimizer_name, BoundFile, DatasetFile, Method, OptimizerRecord, RegionBox,
    ReportFile, ReportRow, TubeFile,
};
use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::json::{digest_of, read_json, write_atomic, write_json};

// ---------------------------------------------------------------------------
// Paths and shared helpers

pub fn dataset_path(out: &Path, name: &str) -> PathBuf {
    out.join("datasets").join(format!("{name}.json"))
}

pub fn bound_path(out: &Path, stem: &str) -> PathBuf {
    out.join("bounds").join(format!("{stem}.json"))
}

pub fn tube_path(out: &Path, stem: &str) -> PathBuf {
    out.join("tubes").join(format!("{stem}.json"))
}

pub fn tube_csv_path(out: &Path, stem: &str) -> PathBuf {
    out.join("tubes").join(format!("{stem}.csv"))
}

pub fn report_path(out: &Path, ext: &str) -> PathBuf {
    out.join(format!("report.{ext}"))
}

/// Digest identifying the exact configuration an artifact was computed
/// from. The output directory is excluded: where artifacts land does not
/// change what they contain.
pub fn config_digest(config: &PipelineConfig) -> Result<String> {
    let mut canonical = config.clone();
    canonical.out_dir = PathBuf::new();
    digest_of(&canonical)
}

/// The full method grid of a config, in canonical report order: uniform
/// partitions, then optimized ones, then the time baseline.
pub fn method_grid(config: &PipelineConfig) -> Vec<Method> {
    let mut methods: Vec<Method> =
        config.m_values.iter().map(|&m| Method::Uniform { m }).collect();
    for &optimizer in &config.optimizers {
        for &loss in &config.losses {
            // M = 1 has no edges to optimize; the uniform row covers it.
            for &m in config.m_values.iter().filter(|&&m| m > 1) {
                methods.push(Method::Optimized { optimizer, loss, m });
            }
        }
    }
    methods.push(Method::Baseline);
    methods
}

fn read_dataset(out: &Path, name: &str, goal_position: f64) -> Result<Dataset> {
    let file: DatasetFile = read_json(&dataset_path(out, name))?;
    Ok(file.into_dataset(goal_position))
}

fn slice_dataset(ds: &Dataset, range: core::ops::Range<usize>) -> Dataset {
    Dataset {
        trajectories: ds.trajectories[range].to_vec(),
        horizon: ds.horizon,
        seed: ds.seed,
    }
}

// ---------------------------------------------------------------------------
// generate

/// Generate the trajectory dataset and write it plus all split files.
pub fn cmd_generate(config: &PipelineConfig) -> Result<()> {
    config.validate()?;
    let out = &config.out_dir;
    let stream = substream_seed(config.seed, "dataset");
    let full = generate_dataset(
        config.n_total,
        &config.train_initial_interval(),
        &config.controller,
        &config.noise,
        &config.params,
        config.horizon,
        stream,
    )?;
    let cal = slice_dataset(&full, 0..config.n_cal);
    let splits: Vec<(&str, Dataset)> = vec![
        ("test", slice_dataset(&full, config.n_cal..config.n_total)),
        ("reg", slice_dataset(&cal, 0..config.n_reg)),
        ("conf", slice_dataset(&cal, config.n_reg..config.n_cal)),
        ("baseline_alpha", slice_dataset(&cal, 0..config.n_baseline_alpha)),
        ("baseline_conf", slice_dataset(&cal, config.n_baseline_alpha..config.n_cal)),
        ("cal", cal),
        ("full", full),
    ];
    for (name, ds) in &splits {
        write_json(&dataset_path(out, name), &DatasetFile::from_dataset(ds))?;
    }
    println!(
        "generate: wrote {} trajectories ({} cal / {} test) to {}",
        config.n_total,
        config.n_cal,
        config.n_total - config.n_cal,
        out.join("datasets").display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// calibrate

/// Fit every bound in the method grid and write one artifact per bound,
/// each with its loss history and held-out coverage precomputed.
pub fn cmd_calibrate(config: &PipelineConfig) -> Result<()> {
    config.validate()?;
    let out = &config.out_dir;
    let goal = config.params.goal_position;
    let digest = config_digest(config)?;
    let cal = read_dataset(out, "cal", goal)?;
    let test = read_dataset(out, "test", goal)?;
    let reg = read_dataset(out, "reg", goal)?;
    let conf = read_dataset(out, "conf", goal)?;
    let baseline_alpha = read_dataset(out, "baseline_alpha", goal)?;
    let baseline_conf = read_dataset(out, "baseline_conf", goal)?;
    let range = config.position_range();
    let vb = config.params.velocity_bounds;

    for method in method_grid(config) {
        let stem = method.stem();
        let file = match method {
            Method::Uniform { m } => {
                let eta = fit_eta(&cal, &uniform_partition(m, range), config.alpha);
                let coverage =
                    validate_coverage(&BoundFunction::State(eta.clone()), &test);
                BoundFile {
                    kind: "state".into(),
                    alpha: config.alpha,
                    method: "uniform".into(),
                    m: Some(m),
                    partition: Some(region_boxes(&eta.partition, &vb)),
                    edges: Some(eta.partition.edges.clone()),
                    bounds: BoundFile::bounds_from(&eta.bounds),
                    optimizer: None,
                    loss_value: None,
                    coverage_on_test: coverage,
                    config_digest: digest.clone(),
                }
            }
            Method::Optimized { optimizer, loss, m } => {
                let seed = substream_seed(config.seed, &stem);
                let mut opt = match optimizer {
                    OptimizerKind::Ga => OptimizerSpec::ga(seed),
                    OptimizerKind::Sa => OptimizerSpec::sa(seed),
                };
                opt.budget = config.budget;
                opt.population = config.population;
                let loss_spec = match loss {
                    LossKind::El => LossSpec::el(),
                    LossKind::Etdl => LossSpec::etdl(config.decay),
                };
                let outcome =
                    optimize_partition(&reg, &conf, m, &loss_spec, &opt, config.alpha, range)?;
                let coverage =
                    validate_coverage(&BoundFunction::State(outcome.eta.clone()), &test);
                BoundFile {
                    kind: "state".into(),
                    alpha: config.alpha,
                    method: optimizer_name(optimizer).into(),
                    m: Some(m),
                    partition: Some(region_boxes(&outcome.partition, &vb)),
                    edges: Some(outcome.partition.edges.clone()),
                    bounds: BoundFile::bounds_from(&outcome.eta.bounds),
                    optimizer: Some(OptimizerRecord {
                        optimizer: optimizer_name(optimizer).into(),
                        loss: loss_name(loss).into(),
                        seed,
                        budget: config.budget,
                        loss_history: BoundFile::bounds_from(&outcome.history),
                    }),
                    loss_value: Some(outcome.loss),
                    coverage_on_test: coverage,
                    config_digest: digest.clone(),
                }
            }
            Method::Baseline => {
                let tb = fit_time_baseline(
                    &baseline_alpha,
                    &baseline_conf,
                    config.alpha,
                    config.horizon,
                )?;
                let coverage = validate_coverage(&BoundFunction::Time(tb.clone()), &test);
                BoundFile {
                    kind: "time".into(),
                    alpha: config.alpha,
                    method: "baseline".into(),
                    m: None,
                    partition: None,
                    edges: None,
                    bounds: BoundFile::bounds_from(&tb.per_step_bounds),
                    optimizer: None,
                    loss_value: None,
                    coverage_on_test: coverage,
                    config_digest: digest.clone(),
                }
            }
        };
        write_json(&bound_path(out, &stem), &file)?;
        println!("calibrate: {stem} coverage_on_test={:.4}", file.coverage_on_test);
    }
    Ok(())
}

fn region_boxes(
    partition: &conreach_core::Partition,
    velocity_bounds: &conreach_core::Interval,
) -> Vec<RegionBox> {
    (0..partition.num_regions())
        .map(|i| RegionBox::from_box(&partition.region_box(i, velocity_bounds)))
        .collect()
}

// ---------------------------------------------------------------------------
// verify

/// Compute a reach tube for every calibrated bound. Tubes are written even
/// when infeasible; the first infeasibility is reported via exit code 2.
pub fn cmd_verify(config: &PipelineConfig) -> Result<()> {
    config.validate()?;
    let out = &config.out_dir;
    let digest = config_digest(config)?;
    let mut first_infeasible: Option<CliError> = None;
    for method in method_grid(config) {
        let stem = method.stem();
        let path = bound_path(out, &stem);
        if !path.exists() {
            return Err(CliError::Io(format!(
                "missing bound artifact {} (run `toolkit calibrate` first)",
                path.display()
            )));
        }
        let bound_file: BoundFile = read_json(&path)?;
        let bound = bound_file.to_bound_function(&config.params.velocity_bounds)?;
        let mut spec = VerifySpec::new(
            config.verify_initial_interval(),
            config.subdivisions,
            config.horizon,
        );
        spec.merge_strategy = config.merge_strategy;
        spec.normalize_period = config.normalize_period;
        spec.greedy_threshold = config.greedy_threshold;
        let start = Instant::now();
        let mut tube = compute_reach_tube(&spec, &bound, &config.controller, &config.params)?;
        tube.metrics.wall_time_secs = start.elapsed().as_secs_f64();
        let file = TubeFile {
            bound: stem.clone(),
            merge_strategy: spec.merge_strategy,
            subdivisions: spec.subdivisions,
            initial_set: config.verify_initial_set,
            status: tube.status.clone(),
            per_step: TubeFile::step_rows(&tube.per_step),
            metrics: tube.metrics,
            config_digest: digest.clone(),
        };
        write_json(&tube_path(out, &stem), &file)?;
        write_tube_csv(&tube_csv_path(out, &stem), &file)?;
        match &tube.status {
            TubeStatus::Complete => println!(
                "verify: {stem} max_set_size={:.4} branches={} ({:.2}s)",
                tube.metrics.max_set_size, tube.metrics.total_branches,
                tube.metrics.wall_time_secs
            ),
            TubeStatus::Infeasible { step, region } => {
                println!("verify: {stem} INFEASIBLE at step {step} in region {region}");
                first_infeasible.get_or_insert(CliError::Infeasible {
                    bound: stem.clone(),
                    step: *step,
                    region: *region,
                });
            }
        }
    }
    match first_infeasible {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn write_tube_csv(path: &Path, tube: &TubeFile) -> Result<()> {
    let mut s = String::from("k,p_lo,p_hi,v_lo,v_hi,n_branches\n");
    for row in &tube.per_step {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.k, row.hull.p[0], row.hull.p[1], row.hull.v[0], row.hull.v[1], row.n_branches
        ));
    }
    write_atomic(path, s.as_bytes())
}

// ---------------------------------------------------------------------------
// report

/// Assemble the cross-method comparison from the bound and tube artifacts.
pub fn cmd_report(config: &PipelineConfig) -> Result<()> {
    config.validate()?;
    let out = &config.out_dir;
    let expected_digest = config_digest(config)?;
    let mut rows = Vec::new();
    let mut baseline_steps: Option<Vec<f64>> = None;
    let mut tubes: Vec<(String, TubeFile)> = Vec::new();
    for method in method_grid(config) {
        let stem = method.stem();
        let bpath = bound_path(out, &stem);
        if !bpath.exists() {
            continue;
        }
        let bound: BoundFile = read_json(&bpath)?;
        if bound.config_digest != expected_digest {
            return Err(CliError::Config(format!(
                "bound artifact {stem} was computed from a different configuration; rerun calibrate"
            )));
        }
        let tpath = tube_path(out, &stem);
        let tube: Option<TubeFile> =
            if tpath.exists() { Some(read_json(&tpath)?) } else { None };
        if let Some(t) = &tube {
            if t.config_digest != expected_digest {
                return Err(CliError::Config(format!(
                    "tube artifact {stem} was computed from a different configuration; rerun verify"
                )));
            }
            if matches!(method, Method::Baseline) {
                baseline_steps = Some(t.per_step.iter().map(|r| r.pos_width).collect());
            }
            tubes.push((stem.clone(), t.clone()));
        }
        rows.push(ReportRow {
            name: stem,
            method: bound.method.clone(),
            loss: bound.optimizer.as_ref().map(|o| o.loss.clone()),
            m: bound.m,
            coverage_on_test: bound.coverage_on_test,
            loss_value: bound.loss_value,
            max_set_size: tube.as_ref().and_then(|t| {
                matches!(t.status, TubeStatus::Complete).then_some(t.metrics.max_set_size)
            }),
            tube_status: tube.as_ref().map(|t| match &t.status {
                TubeStatus::Complete => "complete".into(),
                TubeStatus::Infeasible { step, region } => {
                    format!("infeasible@step{step}/region{region}")
                }
            }),
            wall_time_secs: tube.as_ref().map(|t| t.metrics.wall_time_secs),
            edges: bound.edges.clone(),
            bounds: Some(bound.bounds.clone()),
            config_digest: bound.config_digest.clone(),
        });
    }
    if rows.is_empty() {
        return Err(CliError::Io(
            "no bound artifacts found; run `toolkit calibrate` (and `verify`) first".into(),
        ));
    }

    let mut report = ReportFile {
        toolkit_version: env!("CARGO_PKG_VERSION").into(),
        master_seed: config.seed,
        config_digest: expected_digest,
        alpha: config.alpha,
        rows,
        digest: String::new(),
    };
    report.digest = report_digest(&report)?;
    write_json(&report_path(out, "json"), &report)?;
    write_atomic(&report_path(out, "csv"), report_csv(&report).as_bytes())?;
    write_atomic(&report_path(out, "txt"), report_text(&report).as_bytes())?;
    for (stem, tube) in &tubes {
        if stem != "baseline" {
            let csv = comparison_csv(tube, baseline_steps.as_deref());
            write_atomic(&out.join("report").join(format!("{stem}_steps.csv")), csv.as_bytes())?;
        }
    }
    println!("report: {} rows, digest {}", report.rows.len(), report.digest);
    Ok(())
}

/// Digest of the deterministic report content: wall times are excluded so
/// reruns of an identical configuration digest identically.
pub fn report_digest(report: &ReportFile) -> Result<String> {
    let mut canonical = report.clone();
    canonical.digest = String::new();
    for row in &mut canonical.rows {
        row.wall_time_secs = None;
    }
    digest_of(&canonical)
}

fn fmt_opt(v: &Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x}"))
}

fn report_csv(report: &ReportFile) -> String {
    let mut s =
        String::from("name,method,loss,m,coverage_on_test,loss_value,max_set_size,tube_status,wall_time_secs\n");
    for r in &report.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.name,
            r.method,
            r.loss.clone().unwrap_or_default(),
            r.m.map_or(String::new(), |m| m.to_string()),
            r.coverage_on_test,
            fmt_opt(&r.loss_value),
            fmt_opt(&r.max_set_size),
            r.tube_status.clone().unwrap_or_default(),
            fmt_opt(&r.wall_time_secs),
        ));
    }
    s
}

fn report_text(report: &ReportFile) -> String {
    let mut s = format!(
        "conformal reachability report (alpha={}, seed={}, config {})\n\n",
        report.alpha,
        report.master_seed,
        &report.config_digest[..12]
    );
    s.push_str(&format!(
        "{:<14} {:>3} {:>10} {:>10} {:>13} {:>10}\n",
        "method", "M", "coverage", "loss", "max_set_size", "time_s"
    ));
    for r in &report.rows {
        let name = match &r.loss {
            Some(l) => format!("{}+{}", r.method, l),
            None => r.method.clone(),
        };
        s.push_str(&format!(
            "{:<14} {:>3} {:>10.4} {:>10} {:>13} {:>10}\n",
            name,
            r.m.map_or("-".into(), |m| m.to_string()),
            r.coverage_on_test,
            r.loss_value.map_or("-".into(), |l| format!("{l:.4}")),
            r.max_set_size.map_or_else(
                || r.tube_status.clone().unwrap_or_else(|| "-".into()),
                |w| format!("{w:.4}")
            ),
            r.wall_time_secs.map_or("-".into(), |t| format!("{t:.2}")),
        ));
    }
    s
}

/// Per-step plotting CSV for one state tube, with the baseline comparison
/// column when a baseline tube exists.
fn comparison_csv(tube: &TubeFile, baseline_widths: Option<&[f64]>) -> String {
    let with_baseline =
        baseline_widths.is_some_and(|b| b.len() == tube.per_step.len());
    let mut s = String::from("k,p_lo,p_hi,v_lo,v_hi,n_branches,pos_width");
    if with_baseline {
        s.push_str(",baseline_width,state_tighter_than_baseline");
    }
    s.push('\n');
    for (i, row) in tube.per_step.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}",
            row.k, row.hull.p[0], row.hull.p[1], row.hull.v[0], row.hull.v[1],
            row.n_branches, row.pos_width
        ));
        if with_baseline {
            let b = baseline_widths.unwrap()[i];
            s.push_str(&format!(",{},{}", b, row.pos_width < b));
        }
        s.push('\n');
    }
    s
}

/// Convenience for tests and scripted runs: all four stages in order.
pub fn run_all(config: &PipelineConfig) -> Result<()> {
    cmd_generate(config)?;
    cmd_calibrate(config)?;
    cmd_verify(config)?;
    cmd_report(config)
}
