//! Randomized finite-difference check of every built-in loss gradient.
//!
//! cargo run --release --example gradcheck [trials]

use std::time::Instant;

use cmm::gradcheck::{check_gradients, GradCheckConfig, GradCheckRanges};
use cmm::loss::LossKind;

fn main() -> cmm::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    for kind in [LossKind::Cmm, LossKind::PlainMargin, LossKind::AtlReference] {
        let cfg = GradCheckConfig {
            trials,
            ranges: GradCheckRanges {
                kinds: vec![kind],
                ..GradCheckRanges::default()
            },
            ..GradCheckConfig::default()
        };
        let start = Instant::now();
        let report = check_gradients(&cfg)?;
        println!(
            "{:<14} compared {:>5}  excluded {:>3}  failures {:>3}  max rel err {:.2e}  ({:.2?})",
            kind.as_str(),
            report.compared,
            report.excluded,
            report.failures.len(),
            report.max_rel_error,
            start.elapsed()
        );
        for f in report.failures.iter().take(3) {
            println!("  trial {} logits {:?} positives {:?}", f.trial, f.logits, f.positives);
        }
    }
    Ok(())
}
