//! Prints the positive-relation loss over d for several γ as CSV.
//!
//! cargo run --example loss_curves > curves.csv

use cmm::eval::{curve_export, curves_csv, default_curve_gammas, DGrid};

fn main() -> cmm::Result<()> {
    let rows = curve_export(&default_curve_gammas(), &DGrid::default(), 0.2)?;
    print!("{}", curves_csv(&rows));

    for gamma in default_curve_gammas() {
        let at_zero = rows
            .iter()
            .find(|r| r.gamma == gamma && r.d == 0.0)
            .expect("grid contains 0");
        eprintln!("gamma {gamma}: loss at d = 0 is {:.6}", at_zero.loss_pos);
    }
    Ok(())
}
