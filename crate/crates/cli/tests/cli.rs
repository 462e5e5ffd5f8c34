//! End-to-end tests of the `toolkit` binary: subcommand flow, flags, exit
//! codes, and artifact layout.

use std::path::Path;
use std::process::{Command, Output};

fn toolkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toolkit"))
        .args(args)
        .output()
        .expect("toolkit binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = toolkit(args);
    assert!(
        out.status.success(),
        "toolkit {args:?} failed:\n{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Small config keeping the full pipeline under a second.
fn small_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{
            "n_total": 140, "n_cal": 70, "n_reg": 10, "n_baseline_alpha": 6,
            "subdivisions": 5, "m_values": [1, 2], "budget": 40, "population": 8
        }"#,
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn full_pipeline_produces_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = small_config(dir.path());
    let out_s = out.to_string_lossy();
    for cmd in ["generate", "calibrate", "verify", "report"] {
        run_ok(&[cmd, "--config", &cfg, "--out", &out_s]);
    }
    for f in [
        "datasets/full.json",
        "datasets/cal.json",
        "datasets/test.json",
        "datasets/reg.json",
        "datasets/conf.json",
        "datasets/baseline_alpha.json",
        "datasets/baseline_conf.json",
        "bounds/uniform_m1.json",
        "bounds/uniform_m2.json",
        "bounds/ga_el_m2.json",
        "bounds/sa_etdl_m2.json",
        "bounds/baseline.json",
        "tubes/uniform_m1.json",
        "tubes/uniform_m1.csv",
        "report.json",
        "report.csv",
        "report.txt",
        "report/uniform_m1_steps.csv",
    ] {
        assert!(out.join(f).exists(), "missing artifact {f}");
    }
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.starts_with("name,method,loss,m,coverage_on_test"));
    let steps = std::fs::read_to_string(out.join("report/uniform_m1_steps.csv")).unwrap();
    assert!(steps.lines().next().unwrap().ends_with("baseline_width,state_tighter_than_baseline"));
}

#[test]
fn stages_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = small_config(dir.path());
    let out_s = out.to_string_lossy();
    for cmd in ["generate", "calibrate", "generate", "calibrate"] {
        run_ok(&[cmd, "--config", &cfg, "--out", &out_s]);
    }
    // rerunning produced identical bytes
    let a = std::fs::read(out.join("bounds/uniform_m1.json")).unwrap();
    run_ok(&["calibrate", "--config", &cfg, "--out", &out_s]);
    let b = std::fs::read(out.join("bounds/uniform_m1.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_flag_changes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    run_ok(&["generate", "--config", &cfg, "--out", &out1.to_string_lossy()]);
    run_ok(&["generate", "--config", &cfg, "--out", &out2.to_string_lossy(), "--seed", "99"]);
    let a = std::fs::read(out1.join("datasets/full.json")).unwrap();
    let b = std::fs::read(out2.join("datasets/full.json")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn usage_and_config_errors_exit_1() {
    let out = toolkit(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpha": 2.0}"#).unwrap();
    let out = toolkit(&["generate", "--config", &bad.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1), "invalid alpha should exit 1");

    std::fs::write(&bad, r#"{"not_a_field": 1}"#).unwrap();
    let out = toolkit(&["generate", "--config", &bad.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1), "unknown config field should exit 1");
}

#[test]
fn missing_artifacts_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = toolkit(&["calibrate", "--config", &cfg, "--out", &dir.path().join("empty").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3), "calibrate without datasets should exit 3");
    let out = toolkit(&["verify", "--config", &cfg, "--out", &dir.path().join("empty").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3), "verify without bounds should exit 3");
}

#[test]
fn infeasible_verification_exits_2_and_writes_the_tube() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    let cfg = small_config(dir.path());
    run_ok(&["generate", "--config", &cfg, "--out", &out_s]);
    run_ok(&["calibrate", "--config", &cfg, "--out", &out_s]);
    // sabotage a bound: make region 0 infinite so verification cannot start
    let path = out.join("bounds/uniform_m1.json");
    let mut bound: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    bound["bounds"][0] = serde_json::Value::Null;
    std::fs::write(&path, serde_json::to_string(&bound).unwrap()).unwrap();
    let res = toolkit(&["verify", "--config", &cfg, "--out", &out_s]);
    assert_eq!(res.status.code(), Some(2));
    let tube: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("tubes/uniform_m1.json")).unwrap())
            .unwrap();
    assert!(tube["status"]["Infeasible"].is_object(), "tube records the infeasibility");
}

#[test]
fn help_mentions_all_subcommands() {
    let out = run_ok(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for cmd in ["generate", "calibrate", "verify", "report"] {
        assert!(text.contains(cmd), "--help missing {cmd}");
    }
}
