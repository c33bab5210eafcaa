//! Generates both synthetic presets and prints their label statistics.
//!
//! cargo run --release --example generate_dataset [out_dir]

use std::path::PathBuf;

use cmm::synthdata::{distribution_report, generate_split, GenConfig, Preset};

fn main() -> cmm::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    for preset in [Preset::DocredMixed, Preset::ReDocred] {
        let cfg = GenConfig {
            n_documents: 1000,
            ..preset.config()
        };
        let (train, dev) = generate_split(&cfg, 100)?;
        let report = distribution_report(&train);
        println!("{preset:?}: {} pairs in {} documents", report.pairs, report.documents);
        println!(
            "  positive pairs {:.4} (target {}), after corruption {:.4}",
            report.positive_pair_fraction, cfg.positive_rate, report.label_positive_pair_fraction
        );
        println!("  head share {:.3}, tail share {:.4}", report.head_share, report.tail_share);
        println!(
            "  easy/hard {}/{}, corrupted pairs {}, demoted facts {}",
            report.easy_pairs, report.hard_pairs, report.corrupted_pairs, report.demoted_facts
        );

        if let Some(dir) = &out {
            let dir = dir.join(format!("{preset:?}").to_lowercase());
            std::fs::create_dir_all(&dir).map_err(|e| cmm::Error::Generation(e.to_string()))?;
            train.save(dir.join("train.jsonl"))?;
            dev.save(dir.join("dev.jsonl"))?;
            println!("  wrote {}", dir.display());
        }
    }
    Ok(())
}
