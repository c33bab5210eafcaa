//! Decodes predictions and scores them with micro-F1 and Ign-F1, against
//! both the corrupted training labels and the ground truth.
//!
//! cargo run --release --example evaluate

use cmm::encoder::{train, Checkpoint, TrainConfig};
use cmm::eval::{decode, ign_f1, micro_f1, GoldView, PredictionSet};
use cmm::schema::LogitRow;
use cmm::synthdata::{generate_split, GenConfig};

fn main() -> cmm::Result<()> {
    let row = LogitRow::new(vec![0.3, 0.5, 0.1, 0.3])?;
    println!("decode {:?} -> {:?} (ties go to NA)", row.values(), decode(&row));

    let gen = GenConfig {
        n_documents: 80,
        ..GenConfig::docred_mixed()
    };
    let (train_set, dev) = generate_split(&gen, 30)?;
    let cfg = TrainConfig {
        epochs: 8,
        ..TrainConfig::default()
    };
    let outcome = train(&train_set, &dev, &cfg)?;

    // Round-trip through the on-disk checkpoint format.
    let checkpoint = Checkpoint::new(&outcome.params, &outcome.optimizer, &cfg);
    let json = checkpoint.to_json()?;
    let restored: Checkpoint = serde_json::from_str(&json).expect("checkpoint json");
    let params = restored.params()?;

    for (name, data) in [("train", &train_set), ("dev", &dev)] {
        let predictions = PredictionSet::predict(&params, data)?;
        for gold in [GoldView::Labels, GoldView::TrueLabels] {
            let m = micro_f1(&predictions, data, gold)?;
            let ign = ign_f1(&predictions, data, gold)?;
            println!(
                "{name:<5} gold={gold:<11?} P {:.4} R {:.4} F1 {:.4} Ign-F1 {:.4} (tp {} fp {} fn {})",
                m.precision, m.recall, m.f1, ign.f1, m.true_positives, m.false_positives, m.false_negatives
            );
        }
    }
    Ok(())
}
