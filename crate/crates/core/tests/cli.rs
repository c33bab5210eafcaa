use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cmm::loss::log_sigmoid;
use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_cmm");

fn cmm(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove(cmm::cli::OUTPUT_ROOT_ENV)
        .output()
        .expect("spawn cmm")
}

fn write_json(dir: &Path, name: &str, value: Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Small generated dataset under `dir/data`.
fn small_data(dir: &Path) {
    write_json(
        dir,
        "gen.json",
        json!({
            "preset": "docred-mixed",
            "generator": {"n_documents": 12, "pairs_per_document": 30, "positive_rate": 0.1},
            "dev_documents": 6
        }),
    );
    ok(&cmm(dir, &["generate", "gen.json", "--out", "data"]));
}

#[test]
fn generate_writes_dataset_report_and_manifest() {
    let tmp = TempDir::new().unwrap();
    small_data(tmp.path());
    let data = tmp.path().join("data");
    for f in ["train.jsonl", "dev.jsonl", "report.json", "manifest.json"] {
        assert!(data.join(f).exists(), "{f} missing");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(data.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["format"], "cmm-run/v1");
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["config"]["generator"]["n_documents"], 12);
    assert_eq!(manifest["effective"]["generator"]["feature_dim"], 64);
    let report: Value = serde_json::from_str(&fs::read_to_string(data.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["train"]["pairs"], 360);
    assert_eq!(report["dev"]["pairs"], 180);
}

#[test]
fn train_two_arms_share_epoch_grid_and_eval_reads_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    small_data(dir);
    write_json(
        dir,
        "train.json",
        json!({
            "train_data": "data/train.jsonl",
            "dev_data": "data/dev.jsonl",
            "train": {"epochs": 4, "eval_every": 2},
            "arms": [{"kind": "cmm", "gamma": 1.2, "m": 0.2}, {"kind": "plain_margin"}]
        }),
    );
    ok(&cmm(dir, &["train", "train.json", "-o", "tr"]));
    let a = fs::read_to_string(dir.join("tr/cmm_g1.2_m0.2/trace.csv")).unwrap();
    let b = fs::read_to_string(dir.join("tr/plain_margin/trace.csv")).unwrap();
    assert!(a.starts_with("epoch,train_loss,f1,ign_f1,positives\n"));
    let epochs = |s: &str| s.lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(epochs(&a), vec!["2", "4"]);
    assert_eq!(epochs(&a), epochs(&b));
    let positives = fs::read_to_string(dir.join("tr/positives.csv")).unwrap();
    assert!(positives.starts_with("epoch,arm,positives\n2,cmm_g1.2_m0.2,"));

    write_json(
        dir,
        "eval.json",
        json!({"checkpoint": "tr/cmm_g1.2_m0.2/checkpoint.json", "data": "data/dev.jsonl"}),
    );
    ok(&cmm(dir, &["eval", "eval.json", "-o", "ev"]));
    let metrics: Value = serde_json::from_str(&fs::read_to_string(dir.join("ev/metrics.json")).unwrap()).unwrap();
    let last = a.lines().last().unwrap().split(',').collect::<Vec<_>>();
    assert_eq!(metrics["micro"]["f1"].as_f64().unwrap(), last[2].parse::<f64>().unwrap());
    assert_eq!(metrics["predicted_positives"].as_u64().unwrap(), last[4].parse::<u64>().unwrap());
}

#[test]
fn toy_training_loss_decreases() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    small_data(dir);
    write_json(
        dir,
        "train.json",
        json!({"train_data": "data/train.jsonl", "dev_data": "data/dev.jsonl", "train": {"epochs": 6}}),
    );
    ok(&cmm(dir, &["train", "train.json", "-o", "tr"]));
    let trace = fs::read_to_string(dir.join("tr/cmm_g1_m0.2/trace.csv")).unwrap();
    let losses: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
}

#[test]
fn compare_with_one_tuple_matches_train() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    small_data(dir);
    let train_cfg = json!({"epochs": 3, "seed": 5});
    write_json(
        dir,
        "compare.json",
        json!({
            "train_data": "data/train.jsonl",
            "dev_data": "data/dev.jsonl",
            "train": train_cfg,
            "grid": {"gammas": [1.4], "ms": [0.3], "seeds": [5], "baselines": []}
        }),
    );
    write_json(
        dir,
        "train.json",
        json!({
            "train_data": "data/train.jsonl",
            "dev_data": "data/dev.jsonl",
            "train": train_cfg,
            "arms": [{"kind": "cmm", "gamma": 1.4, "m": 0.3}]
        }),
    );
    ok(&cmm(dir, &["compare", "compare.json", "-o", "cmp"]));
    ok(&cmm(dir, &["train", "train.json", "-o", "tr"]));
    assert_eq!(
        fs::read(dir.join("cmp/traces/cmm_g1.4_m0.3_s5.csv")).unwrap(),
        fs::read(dir.join("tr/cmm_g1.4_m0.3/trace.csv")).unwrap()
    );
    let grid = fs::read_to_string(dir.join("cmp/grid.csv")).unwrap();
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines[0], "arm,kind,gamma,m,seed,f1,ign_f1,positives,best");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("cmm_g1.4_m0.3,cmm,1.4,0.3,5,") && lines[1].ends_with(",1"));
}

#[test]
fn curves_default_grid_and_gamma_zero() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(&cmm(dir, &["curves", "--out", "c"]));
    let csv = fs::read_to_string(dir.join("c/curves.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5 * 201);

    write_json(dir, "zero.json", json!({"gammas": [0.0]}));
    ok(&cmm(dir, &["curves", "zero.json", "--out", "z"]));
    let csv = fs::read_to_string(dir.join("z/curves.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[2] + log_sigmoid(v[0])).abs() < 1e-15, "{line}");
    }
}

#[test]
fn gradcheck_default_passes() {
    let tmp = TempDir::new().unwrap();
    let out = cmm(tmp.path(), &["gradcheck", "-o", "g"]);
    ok(&out);
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("g/gradcheck.json")).unwrap()).unwrap();
    assert_eq!(report["format"], "cmm-gradcheck/v1");
    assert_eq!(report["trials"], 1000);
    assert_eq!(report["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn gradcheck_failure_exits_two() {
    let tmp = TempDir::new().unwrap();
    write_json(tmp.path(), "strict.json", json!({"trials": 50, "tolerance": 0.0}));
    let out = cmm(tmp.path(), &["gradcheck", "strict.json", "-o", "g"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(tmp.path().join("g/gradcheck.json").exists());
}

#[test]
fn config_errors_exit_one_with_field_names() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write_json(dir, "bad.json", json!({"generator": {"positive_rate": 1.5}}));
    let out = cmm(dir, &["generate", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("positive_rate"));

    write_json(dir, "typo.json", json!({"trails": 10}));
    let out = cmm(dir, &["gradcheck", "typo.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));

    assert_eq!(cmm(dir, &["curves", "missing.json"]).status.code(), Some(1));
    assert_eq!(cmm(dir, &["frobnicate"]).status.code(), Some(1));
    fs::write(dir.join("broken.json"), "{not json").unwrap();
    assert_eq!(cmm(dir, &["curves", "broken.json"]).status.code(), Some(1));
    assert_eq!(cmm(dir, &["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write_json(dir, "t.json", json!({"train_data": "nope.jsonl", "dev_data": "nope.jsonl"}));
    assert_eq!(cmm(dir, &["train", "t.json"]).status.code(), Some(2));
}

#[test]
fn output_root_env_overrides_location() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("root");
    let out = Command::new(BIN)
        .args(["curves", "--out", "mine"])
        .current_dir(tmp.path())
        .env(cmm::cli::OUTPUT_ROOT_ENV, &root)
        .output()
        .unwrap();
    ok(&out);
    assert!(root.join("mine/curves.csv").exists());
    assert!(!tmp.path().join("mine").exists());

    let out = Command::new(BIN)
        .arg("curves")
        .current_dir(tmp.path())
        .env(cmm::cli::OUTPUT_ROOT_ENV, &root)
        .output()
        .unwrap();
    ok(&out);
    assert!(root.join("curves/curves.csv").exists());
}
