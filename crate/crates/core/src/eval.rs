//! Threshold-class decoding, micro-averaged F1 / Ign-F1, and the tables
//! behind the positive-prediction and positive-loss plots.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderParams, TrainTrace};
use crate::error::{Error, Result};
use crate::loss::{positive_term, GAMMA_GRID};
use crate::schema::{Dataset, LabelSet, LogitRow};

/// Relations whose logit strictly exceeds the TH logit. Empty means NA.
pub fn decode(logits: &LogitRow) -> BTreeSet<usize> {
    let th = logits.th();
    (1..=logits.relation_count())
        .filter(|&r| logits[r] > th)
        .collect()
}

/// Predicted relation sets keyed by pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    pub pairs: Vec<(String, BTreeSet<usize>)>,
}

impl PredictionSet {
    pub fn predict(params: &EncoderParams, data: &Dataset) -> Result<Self> {
        let pairs = data
            .examples
            .iter()
            .map(|ex| Ok((ex.pair_id.clone(), decode(&params.encode(&ex.features)?))))
            .collect::<Result<_>>()?;
        Ok(Self { pairs })
    }

    pub fn positive_count(&self) -> usize {
        self.pairs.iter().map(|(_, s)| s.len()).sum()
    }
}

/// Which label view of a dataset counts as gold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldView {
    /// Training labels, including injected false negatives.
    Labels,
    /// Generator ground truth.
    #[default]
    TrueLabels,
}

impl GoldView {
    fn of(self, ex: &crate::schema::PairExample) -> &LabelSet {
        match self {
            GoldView::Labels => &ex.labels,
            GoldView::TrueLabels => &ex.true_labels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ign_f1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Counts {
    fn precision(self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    fn recall(self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    fn f1(self) -> f64 {
        f1_score(self.precision(), self.recall())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `2PR / (P + R)`, zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Counts over all facts and over facts not flagged `seen_in_train`.
fn count(predictions: &PredictionSet, data: &Dataset, gold: GoldView) -> Result<(Counts, Counts)> {
    if predictions.pairs.len() != data.examples.len() {
        return Err(Error::Schema(format!(
            "{} predictions for {} gold pairs",
            predictions.pairs.len(),
            data.examples.len()
        )));
    }
    let by_id: HashMap<&str, &BTreeSet<usize>> = predictions
        .pairs
        .iter()
        .map(|(id, set)| (id.as_str(), set))
        .collect();
    if by_id.len() != predictions.pairs.len() {
        return Err(Error::Schema("duplicate pair ids in predictions".into()));
    }

    let mut all = Counts::default();
    let mut ign = Counts::default();
    for ex in &data.examples {
        let predicted = by_id
            .get(ex.pair_id.as_str())
            .ok_or_else(|| Error::Schema(format!("no prediction for pair {}", ex.pair_id)))?;
        let truth = gold.of(ex).positives();
        let mut tally = |r: usize, c: &mut dyn FnMut(&mut Counts)| {
            c(&mut all);
            if !ex.seen_in_train.contains(&r) {
                c(&mut ign);
            }
        };
        for &r in predicted.iter() {
            if truth.contains(&r) {
                tally(r, &mut |c| c.tp += 1);
            } else {
                tally(r, &mut |c| c.fp += 1);
            }
        }
        for &r in truth.difference(predicted) {
            tally(r, &mut |c| c.fn_ += 1);
        }
    }
    Ok((all, ign))
}

fn record(main: Counts, ign: Counts) -> MetricsRecord {
    MetricsRecord {
        true_positives: main.tp,
        false_positives: main.fp,
        false_negatives: main.fn_,
        precision: main.precision(),
        recall: main.recall(),
        f1: main.f1(),
        ign_f1: ign.f1(),
    }
}

/// Micro-averaged metrics over every (pair, relation) fact. `ign_f1` is
/// filled from the same pass.
pub fn micro_f1(predictions: &PredictionSet, data: &Dataset, gold: GoldView) -> Result<MetricsRecord> {
    let (all, ign) = count(predictions, data, gold)?;
    Ok(record(all, ign))
}

/// Metrics after dropping every fact flagged `seen_in_train` from both the
/// predictions and the gold set.
pub fn ign_f1(predictions: &PredictionSet, data: &Dataset, gold: GoldView) -> Result<MetricsRecord> {
    let (_, ign) = count(predictions, data, gold)?;
    Ok(record(ign, ign))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveCountRow {
    pub epoch: usize,
    pub arm: String,
    pub positives: usize,
}

/// `(epoch, arm, positives)` rows, arms in input order.
pub fn positive_count_trace(traces: &[TrainTrace]) -> Vec<PositiveCountRow> {
    traces
        .iter()
        .flat_map(|t| {
            t.records.iter().map(|r| PositiveCountRow {
                epoch: r.epoch,
                arm: t.arm.clone(),
                positives: r.positives,
            })
        })
        .collect()
}

pub const POSITIVES_CSV_HEADER: &str = "epoch,arm,positives";

pub fn positive_count_csv(rows: &[PositiveCountRow]) -> String {
    let mut out = format!("{POSITIVES_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.epoch, r.arm, r.positives));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub d: f64,
    pub gamma: f64,
    pub loss_pos: f64,
}

/// Grid of `d` values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for DGrid {
    fn default() -> Self {
        Self {
            min: -5.0,
            max: 5.0,
            step: 0.05,
        }
    }
}

impl DGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(Error::config("d_grid", "need finite min <= max"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("d_grid.step", "must be positive"));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        let first = (self.min / self.step).round();
        // Multiply integer offsets so grid points do not accumulate rounding.
        if (first * self.step - self.min).abs() < 1e-12 {
            Ok((0..=n).map(|i| (first + i as f64) * self.step).collect())
        } else {
            Ok((0..=n).map(|i| self.min + i as f64 * self.step).collect())
        }
    }
}

pub fn default_curve_gammas() -> Vec<f64> {
    GAMMA_GRID.to_vec()
}

/// Positive-term loss `-(1 - q)^γ q` for each `γ` over the grid, series by
/// series. `m` only affects negatives and is accepted for completeness.
pub fn curve_export(gammas: &[f64], grid: &DGrid, _m: f64) -> Result<Vec<CurveRow>> {
    let points = grid.points()?;
    if let Some(&g) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::config("gammas", format!("must be finite and >= 0, got {g}")));
    }
    Ok(gammas
        .iter()
        .flat_map(|&gamma| {
            points.iter().map(move |&d| CurveRow {
                d,
                gamma,
                loss_pos: positive_term(d, gamma),
            })
        })
        .collect())
}

pub const CURVES_CSV_HEADER: &str = "d,gamma,loss_pos";

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut out = format!("{CURVES_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.d, r.gamma, r.loss_pos));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EpochRecord;
    use crate::schema::{Difficulty, Manifest, PairExample, RelationSchema};

    fn row(v: &[f64]) -> LogitRow {
        LogitRow::new(v.to_vec()).unwrap()
    }

    #[test]
    fn decode_is_strict() {
        assert_eq!(decode(&row(&[0.3, 0.5, 0.1])), BTreeSet::from([1]));
        assert!(decode(&row(&[1.0, 0.5, -0.1])).is_empty());
        assert!(decode(&row(&[0.5, 0.5, 0.2])).is_empty());
    }

    fn dataset(gold: &[&[usize]], seen: &[&[usize]]) -> Dataset {
        let examples = gold
            .iter()
            .enumerate()
            .map(|(i, pos)| {
                let labels = LabelSet::new(pos.iter().copied(), 3).unwrap();
                PairExample {
                    pair_id: format!("p{i}"),
                    doc_id: 0,
                    features: vec![0.0],
                    true_labels: labels.clone(),
                    labels,
                    seen_in_train: seen.get(i).map(|s| s.iter().copied().collect()).unwrap_or_default(),
                    difficulty: Difficulty::Easy,
                    corrupted: false,
                }
            })
            .collect();
        Dataset::new(RelationSchema::numbered(3).unwrap(), examples, Manifest::custom())
    }

    fn preds(sets: &[&[usize]]) -> PredictionSet {
        PredictionSet {
            pairs: sets
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("p{i}"), s.iter().copied().collect()))
                .collect(),
        }
    }

    #[test]
    fn perfect_and_degenerate_predictors() {
        let data = dataset(&[&[1], &[2, 3], &[]], &[]);
        let m = micro_f1(&preds(&[&[1], &[2, 3], &[]]), &data, GoldView::Labels).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let m = micro_f1(&preds(&[&[], &[], &[]]), &data, GoldView::Labels).unwrap();
        assert_eq!((m.recall, m.f1), (0.0, 0.0));
    }

    #[test]
    fn two_tp_one_fp_one_fn() {
        let data = dataset(&[&[1], &[2, 3]], &[]);
        let m = micro_f1(&preds(&[&[1, 2], &[2]]), &data, GoldView::Labels).unwrap();
        assert_eq!((m.true_positives, m.false_positives, m.false_negatives), (2, 1, 1));
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ign_without_flags_equals_micro() {
        let data = dataset(&[&[1], &[2, 3]], &[]);
        let p = preds(&[&[1, 2], &[2]]);
        assert_eq!(
            micro_f1(&p, &data, GoldView::Labels).unwrap(),
            ign_f1(&p, &data, GoldView::Labels).unwrap()
        );
    }

    #[test]
    fn ign_with_all_gold_flagged_is_zero() {
        let data = dataset(&[&[1], &[2]], &[&[1], &[2]]);
        let m = ign_f1(&preds(&[&[1], &[2]]), &data, GoldView::Labels).unwrap();
        assert_eq!(m.true_positives + m.false_negatives, 0);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn mismatched_pairs_error() {
        let data = dataset(&[&[1], &[2]], &[]);
        assert!(micro_f1(&preds(&[&[1]]), &data, GoldView::Labels).is_err());
        let mut p = preds(&[&[1], &[2]]);
        p.pairs[1].0 = "other".into();
        assert!(micro_f1(&p, &data, GoldView::Labels).is_err());
    }

    #[test]
    fn positive_count_rows() {
        let rec = |epoch, positives| EpochRecord { epoch, train_loss: 0.0, f1: 0.0, ign_f1: 0.0, positives };
        let trace = TrainTrace { arm: "cmm".into(), records: (1..=5).map(|e| rec(e, e * 2)).collect() };
        let rows = positive_count_trace(std::slice::from_ref(&trace));
        assert_eq!(rows.len(), 5);
        assert!(rows.windows(2).all(|w| w[0].epoch < w[1].epoch));
        let empty = TrainTrace { arm: "x".into(), records: vec![] };
        assert!(positive_count_trace(&[empty]).is_empty());
        assert!(positive_count_csv(&rows).starts_with("epoch,arm,positives\n1,cmm,2\n"));
    }

    #[test]
    fn curves_default_grid() {
        let rows = curve_export(&default_curve_gammas(), &DGrid::default(), 0.2).unwrap();
        assert_eq!(rows.len(), 1005);
        let origin = rows.iter().find(|r| r.d == 0.0 && r.gamma == 1.0).unwrap();
        assert!((origin.loss_pos - 1.173_600_194_478_146_7).abs() < 1e-12);
        assert!(rows.iter().filter(|r| r.d == 5.0).all(|r| r.loss_pos < 0.05));
        assert_eq!(rows[0].d, -5.0);
        assert_eq!(rows[200].d, 5.0);
    }

    #[test]
    fn gamma_zero_curve_is_neg_log_sigmoid() {
        let rows = curve_export(&[0.0], &DGrid::default(), 0.2).unwrap();
        for r in rows {
            let expected = (1.0 + (-r.d).exp()).ln();
            assert!((r.loss_pos - expected).abs() < 1e-12);
        }
    }
}
