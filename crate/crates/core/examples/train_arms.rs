//! Trains a CMM arm and a plain-margin arm on the same noisy data and
//! prints their dev traces side by side.
//!
//! cargo run --release --example train_arms

use cmm::encoder::{train, TrainConfig};
use cmm::loss::{LossConfig, LossKind};
use cmm::synthdata::{generate_split, GenConfig};

fn main() -> cmm::Result<()> {
    let gen = GenConfig {
        n_documents: 100,
        positive_rate: 0.03,
        ..GenConfig::docred_mixed()
    };
    let (train_set, dev) = generate_split(&gen, 40)?;

    let base = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let cmm_run = train(&train_set, &dev, &TrainConfig { loss: LossConfig::cmm(2.0, 0.4), ..base.clone() })?;
    let plain_run = train(
        &train_set,
        &dev,
        &TrainConfig { loss: LossConfig::of_kind(LossKind::PlainMargin), ..base },
    )?;

    println!("epoch | {:^26} | {:^26}", cmm_run.trace.arm, plain_run.trace.arm);
    println!("      | {:>8} {:>7} {:>9} | {:>8} {:>7} {:>9}", "loss", "f1", "positives", "loss", "f1", "positives");
    for (a, b) in cmm_run.trace.records.iter().zip(&plain_run.trace.records) {
        println!(
            "{:>5} | {:>8.4} {:>7.4} {:>9} | {:>8.2} {:>7.4} {:>9}",
            a.epoch, a.train_loss, a.f1, a.positives, b.train_loss, b.f1, b.positives
        );
    }
    Ok(())
}
