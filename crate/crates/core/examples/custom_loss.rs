//! Trains with a caller-defined loss through the `MarginLoss` trait.
//!
//! cargo run --release --example custom_loss

use cmm::encoder::{train_with_loss, TrainConfig};
use cmm::loss::{self, LossConfig, LossKind, MarginLoss};
use cmm::schema::{LabelSet, LogitRow, TH_INDEX};
use cmm::synthdata::{generate_split, GenConfig};

/// Squared hinge on each distance with a unit margin.
struct SquaredHinge;

impl MarginLoss for SquaredHinge {
    fn value(&self, logits: &LogitRow, labels: &LabelSet, _: &LossConfig) -> cmm::Result<f64> {
        let d = loss::margin_distances(logits, labels)?;
        Ok(d.d_pos.values().chain(d.d_neg.values()).map(|&d| (1.0 - d).max(0.0).powi(2)).sum())
    }

    fn gradient(&self, logits: &LogitRow, labels: &LabelSet, _: &LossConfig) -> cmm::Result<Vec<f64>> {
        let d = loss::margin_distances(logits, labels)?;
        let mut grad = vec![0.0; logits.values().len()];
        for (&r, &d) in &d.d_pos {
            let g = -2.0 * (1.0 - d).max(0.0);
            grad[r] += g;
            grad[TH_INDEX] -= g;
        }
        for (&r, &d) in &d.d_neg {
            let g = -2.0 * (1.0 - d).max(0.0);
            grad[TH_INDEX] += g;
            grad[r] -= g;
        }
        Ok(grad)
    }
}

fn main() -> cmm::Result<()> {
    let gen = GenConfig {
        n_documents: 60,
        ..GenConfig::re_docred()
    };
    let (train, dev) = generate_split(&gen, 20)?;
    let cfg = TrainConfig {
        epochs: 10,
        loss: LossConfig::of_kind(LossKind::Plugin),
        ..TrainConfig::default()
    };
    let outcome = train_with_loss(&train, &dev, &cfg, &SquaredHinge)?;
    for r in &outcome.trace.records {
        println!("epoch {:>2}  loss {:.4}  f1 {:.4}  positives {}", r.epoch, r.train_loss, r.f1, r.positives);
    }
    Ok(())
}
