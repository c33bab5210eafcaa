//! Searches the (γ, m) grid against the plain-margin and adaptive-threshold
//! baselines, then prints seed-averaged F1 and positive-prediction counts.
//!
//! cargo run --release --example compare_grid            # reduced scale
//! cargo run --release --example compare_grid -- --full  # 300 docs, 3 seeds, 30 epochs

use std::time::Instant;

use cmm::cli::{run_grid, GridSpec};
use cmm::encoder::TrainConfig;
use cmm::loss::LossKind;
use cmm::synthdata::{generate_split, GenConfig};

fn main() -> cmm::Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let gen = GenConfig {
        n_documents: if full { 300 } else { 60 },
        positive_rate: 0.03,
        ..GenConfig::docred_mixed()
    };
    let (train, dev) = generate_split(&gen, if full { 100 } else { 30 })?;
    let base = TrainConfig {
        epochs: if full { 30 } else { 10 },
        ..TrainConfig::default()
    };
    let grid = GridSpec {
        seeds: if full { vec![0, 1, 2] } else { vec![0] },
        ..GridSpec::default()
    };

    let start = Instant::now();
    let outcome = run_grid(&train, &dev, &base, &grid)?;
    println!("{} runs in {:.1?}\n", outcome.runs.len(), start.elapsed());
    print!("{}", outcome.summary_csv());

    let best = outcome.best_arm(LossKind::Cmm).map(|i| &outcome.arms[i]).expect("cmm arms");
    let plain = outcome.arm(LossKind::PlainMargin).expect("plain arm");
    let atl = outcome.arm(LossKind::AtlReference).expect("atl arm");
    println!("\nmean dev positives per epoch");
    println!("{:>5} {:>14} {:>14} {:>14}", "epoch", best.loss.label(), "plain_margin", "atl_reference");
    for ((&(epoch, b), &(_, p)), &(_, a)) in best.mean_positives.iter().zip(&plain.mean_positives).zip(&atl.mean_positives) {
        println!("{epoch:>5} {b:>14.1} {p:>14.1} {a:>14.1}");
    }
    Ok(())
}
