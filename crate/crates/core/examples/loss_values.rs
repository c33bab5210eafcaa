//! Evaluates the margin losses and their gradients on one logit row.
//!
//! cargo run --example loss_values

use cmm::loss::{self, LossConfig, LossKind, MarginLoss};
use cmm::schema::{LabelSet, LogitRow};

fn main() -> cmm::Result<()> {
    // TH, then relations 1..=4. Relations 1 and 3 are gold.
    let logits = LogitRow::new(vec![0.5, 1.5, -2.0, 0.2, 4.0])?;
    let labels = LabelSet::new([1, 3], 4)?;

    let d = loss::margin_distances(&logits, &labels)?;
    println!("d+ = {:?}", d.d_pos);
    println!("d- = {:?}", d.d_neg);

    let arms = [
        LossConfig::of_kind(LossKind::PlainMargin),
        LossConfig::of_kind(LossKind::AtlReference),
        LossConfig::cmm(1.0, 0.2),
        LossConfig::cmm(2.0, 0.4),
    ];
    for cfg in arms {
        let imp: &dyn MarginLoss = loss::builtin(cfg.kind).expect("built-in kind");
        let (value, grad) = imp.value_and_gradient(&logits, &labels, &cfg)?;
        let grad: Vec<String> = grad.iter().map(|g| format!("{g:+.4}")).collect();
        println!("{:<16} loss {value:>9.5}  grad [{}]", cfg.label(), grad.join(", "));
    }

    let m = 0.2;
    println!("negatives with d- >= {:.4} are clamped at m = {m}", loss::clamp_threshold(m));
    for d in [-1.0, 0.0, 1.0, 1.4, 2.0] {
        println!(
            "  d- = {d:>4}: term {:.6}  slope {:+.6}",
            loss::negative_term(d, m),
            loss::negative_term_slope(d, m)
        );
    }
    Ok(())
}
