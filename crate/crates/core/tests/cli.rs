use std::process::Command;

use smarthelp::benchmark::{BenchmarkReport, REPORT_SCHEMA};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smarthelp"))
}

#[test]
fn verify_passes() {
    let out = bin().arg("verify").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn benchmark_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run-benchmark", "--policy", "smart", "--lambda-e", "1.0", "--scene-seeds", "20,21", "--repeats", "1"])
        .env("SMARTHELP_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let r: BenchmarkReport = serde_json::from_str(&text).unwrap();
    assert_eq!(r.schema, REPORT_SCHEMA);
    assert_eq!(r.policies.len(), 1);
    assert_eq!(r.policies[0].metrics.episodes, 2 * r.pairs.evaluated.len());
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert!(table.starts_with("Policy,lambda_e,SR"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"scene_seeds": [20], "repeats": 1, "policies": ["random"], "lambda_e": 0.0}"#).unwrap();
    let out = bin()
        .args(["--json", "run-benchmark", "--config"])
        .arg(&cfg)
        .args(["--lambda-e", "0.5", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["policies"][0]["policy"], "random");
    assert_eq!(v["policies"][0]["lambda_e"], 0.5);
}

#[test]
fn missing_flag_is_a_usage_error() {
    let out = bin().args(["run-episode", "--task", "make-coffee"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("required"));
    let bad = bin().args(["run-benchmark", "--policy", "oracle"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn episode_json_and_dataset_export() {
    let out = bin()
        .args(["--json", "run-episode", "--scene-seed", "21", "--task", "arrange-room", "--ctype", "gamma", "--policy", "smart"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let log: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(log["scenario_id"], "s21-arrange-room-gamma");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.jsonl");
    let out = bin().args(["export-dataset", "--count", "50", "--out"]).arg(&path).output().unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 51);
    assert!(smarthelp::dataset::histogram_path(&path).exists());
}

#[test]
fn scenes_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["generate-scenes", "--seeds", "3,4", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let c = smarthelp::catalog::Catalog::kitchen();
    let s = smarthelp::scene::load_scene(&dir.path().join("scenes/scene-3.json"), &c).unwrap();
    let g = smarthelp::scene::generate_scene(3, &Default::default(), &c).unwrap();
    assert_eq!(s, g);
}
