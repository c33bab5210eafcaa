//! Drives the config-file commands in-process: generate, train two arms,
//! evaluate a checkpoint. Artifacts land under $CMM_OUTPUT_ROOT or a
//! temporary directory.
//!
//! cargo run --release --example cli_pipeline

use std::path::PathBuf;

use cmm::cli::{self, Command, ConfigSource, OUTPUT_ROOT_ENV};
use serde_json::json;

fn main() -> cmm::Result<()> {
    let root = std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cmm-pipeline"));

    let steps = [
        (
            Command::Generate,
            "data",
            json!({
                "preset": "docred-mixed",
                "generator": {"n_documents": 40, "positive_rate": 0.05},
                "dev_documents": 15
            }),
        ),
        (
            Command::Train,
            "train",
            json!({
                "train_data": "data/train.jsonl",
                "dev_data": "data/dev.jsonl",
                "train": {"epochs": 6},
                "arms": [{"kind": "cmm", "gamma": 1.2, "m": 0.3}, {"kind": "plain_margin"}]
            }),
        ),
        (
            Command::Eval,
            "eval",
            json!({
                "checkpoint": "train/cmm_g1.2_m0.3/checkpoint.json",
                "data": "data/dev.jsonl",
                "gold": "true_labels"
            }),
        ),
        (Command::Curves, "curves", json!({"gammas": [0, 1, 2]})),
    ];
    for (command, dir, config) in steps {
        let source = ConfigSource::from_value(config, &root);
        let summary = cli::run(command, &source, &root.join(dir))?;
        println!("{command}: {}", summary.artifacts.join(", "));
    }
    let metrics = std::fs::read_to_string(root.join("eval/metrics.json")).expect("metrics written");
    println!("\n{metrics}");
    Ok(())
}
