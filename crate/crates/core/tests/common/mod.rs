//! Strategies, property bodies and brute-force oracles shared by the
//! property and acceptance test targets.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use cmm::eval::{decode, PredictionSet};
use cmm::loss::{self, LossConfig};
use cmm::schema::{Dataset, Difficulty, LabelSet, LogitRow, Manifest, PairExample, RelationSchema};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type PropResult = Result<(), TestCaseError>;

/// A logit row over 1..=12 relations with a random label set, possibly
/// without any positives.
pub fn row_and_labels() -> impl Strategy<Value = (LogitRow, LabelSet)> {
    (1usize..=12)
        .prop_flat_map(|r| {
            (
                prop::collection::vec(-8.0f64..8.0, r + 1),
                prop::collection::vec(any::<bool>(), r),
                any::<bool>(),
            )
        })
        .prop_map(|(logits, flags, empty)| {
            let r = flags.len();
            let positives: Vec<usize> = if empty {
                Vec::new()
            } else {
                (1..=r).filter(|&i| flags[i - 1]).collect()
            };
            (LogitRow::new(logits).unwrap(), LabelSet::new(positives, r).unwrap())
        })
}

pub fn gamma() -> impl Strategy<Value = f64> {
    0.0f64..3.0
}

pub fn margin() -> impl Strategy<Value = f64> {
    0.01f64..0.99
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn nonnegative(row: &LogitRow, labels: &LabelSet, g: f64, m: f64) -> PropResult {
    let v = loss::cmm_loss(row, labels, &LossConfig::cmm(g, m)).unwrap();
    prop_assert!(v >= 0.0, "loss {v}");
    Ok(())
}

pub fn shift_invariant(row: &LogitRow, labels: &LabelSet, g: f64, m: f64, c: f64) -> PropResult {
    let shifted = LogitRow::new(row.values().iter().map(|v| v + c).collect()).unwrap();
    let cfg = LossConfig::cmm(g, m);
    let boundary = loss::clamp_threshold(m);
    // A shift can move a distance across the clamp point by rounding alone.
    let near_clamp = labels
        .negatives()
        .iter()
        .any(|&r| ((row.th() - row[r]) - boundary).abs() < 1e-9);

    let (a, b) = (
        loss::margin_distances(row, labels).unwrap(),
        loss::margin_distances(&shifted, labels).unwrap(),
    );
    for (x, y) in a.d_pos.values().zip(b.d_pos.values()).chain(a.d_neg.values().zip(b.d_neg.values())) {
        prop_assert!(close(*x, *y, 1e-12), "distance {x} vs {y}");
    }
    let (p, q) = (
        loss::plain_margin_loss(row, labels).unwrap(),
        loss::plain_margin_loss(&shifted, labels).unwrap(),
    );
    prop_assert!(close(p, q, 1e-10), "plain {p} vs {q}");
    prop_assert_eq!(decode(row), decode(&shifted));
    if !near_clamp {
        let (p, q) = (
            loss::cmm_loss(row, labels, &cfg).unwrap(),
            loss::cmm_loss(&shifted, labels, &cfg).unwrap(),
        );
        prop_assert!(close(p, q, 1e-9), "cmm {p} vs {q}");
        let (ga, gb) = (
            loss::cmm_loss_grad(row, labels, &cfg).unwrap(),
            loss::cmm_loss_grad(&shifted, labels, &cfg).unwrap(),
        );
        for (x, y) in ga.iter().zip(&gb) {
            prop_assert!(close(*x, *y, 1e-9), "grad {x} vs {y}");
        }
    }
    Ok(())
}

/// Positive term strictly decreasing in d, with a strictly negative slope.
pub fn positive_monotone(d1: f64, gap: f64, g: f64) -> PropResult {
    let d2 = d1 + gap;
    let (a, b) = (loss::positive_term(d1, g), loss::positive_term(d2, g));
    prop_assert!(a > b, "term({d1}) = {a} <= term({d2}) = {b}");
    prop_assert!(loss::positive_term_slope(d1, g) < 0.0);
    Ok(())
}

/// Negatives at or beyond log((1 - m) / m) give zero value and gradient,
/// both in isolation and inside a full row.
pub fn negative_clamp(m: f64, excess: f64, g: f64) -> PropResult {
    let d = loss::clamp_threshold(m) + excess;
    prop_assert_eq!(loss::negative_term(d, m), 0.0);
    prop_assert_eq!(loss::negative_term_slope(d, m), 0.0);

    // relation 1 positive, relation 2 a clamped negative
    let row = LogitRow::new(vec![0.0, 0.3, -d]).unwrap();
    let labels = LabelSet::new([1], 2).unwrap();
    let cfg = LossConfig::cmm(g, m);
    let grad = loss::cmm_loss_grad(&row, &labels, &cfg).unwrap();
    prop_assert_eq!(grad[2], 0.0);
    let v = loss::cmm_loss(&row, &labels, &cfg).unwrap();
    prop_assert_eq!(v, loss::positive_term(0.3, g));
    Ok(())
}

/// Larger γ means a larger positive loss wherever the loss is positive.
pub fn gamma_ordering(d: f64, g1: f64, dg: f64) -> PropResult {
    let (a, b) = (loss::positive_term(d, g1), loss::positive_term(d, g1 + dg));
    prop_assert!(a > 0.0);
    prop_assert!(b > a, "γ {g1}: {a}, γ {}: {b}", g1 + dg);
    Ok(())
}

/// γ = 0 gives -log σ(d) on positives; m → 0 gives -log σ(d) on negatives.
pub fn reductions(row: &LogitRow, labels: &LabelSet) -> PropResult {
    let th = row.th();
    for &r in labels.positives() {
        let d = row[r] - th;
        prop_assert!(close(loss::positive_term(d, 0.0), -loss::log_sigmoid(d), 1e-14));
    }
    let m = 1e-12;
    let mut expected = 0.0;
    for &r in labels.positives() {
        expected += -loss::log_sigmoid(row[r] - th);
    }
    for &r in labels.negatives() {
        let d = th - row[r];
        prop_assert!(close(loss::negative_term(d, m), -loss::log_sigmoid(d), 1e-6));
        expected += -loss::log_sigmoid(d);
    }
    let v = loss::cmm_loss(row, labels, &LossConfig::cmm(0.0, m)).unwrap();
    prop_assert!(close(v, expected, 1e-6), "{v} vs {expected}");
    Ok(())
}

pub fn decode_matches_scan(row: &LogitRow) -> PropResult {
    let mut expected = BTreeSet::new();
    let values = row.values();
    for (r, &t) in values.iter().enumerate().skip(1) {
        if t > values[0] {
            expected.insert(r);
        }
    }
    prop_assert_eq!(decode(row), expected);
    Ok(())
}

// ------------------------------------------------------------ metrics oracle

/// A small labelled dataset plus predictions, all random.
#[derive(Debug, Clone)]
pub struct MetricsCase {
    pub data: Dataset,
    pub predictions: PredictionSet,
}

pub fn metrics_case() -> impl Strategy<Value = MetricsCase> {
    (1usize..=10, 1usize..=60).prop_flat_map(|(relations, pairs)| {
        let per_pair = (
            prop::collection::vec(0u8..4, relations),
            prop::collection::vec(any::<bool>(), relations),
            prop::collection::vec(prop::bool::weighted(0.2), relations),
        );
        prop::collection::vec(per_pair, pairs).prop_map(move |rows| build_case(relations, rows))
    })
}

/// `code` per relation: bit 0 = true label, bit 1 = training label.
fn build_case(relations: usize, rows: Vec<(Vec<u8>, Vec<bool>, Vec<bool>)>) -> MetricsCase {
    let mut examples = Vec::new();
    let mut predictions = Vec::new();
    for (i, (codes, predicted, seen)) in rows.into_iter().enumerate() {
        let pick = |f: &dyn Fn(usize) -> bool| -> Vec<usize> { (1..=relations).filter(|&r| f(r)).collect() };
        let truth = pick(&|r| codes[r - 1] & 1 == 1);
        let labels = pick(&|r| codes[r - 1] & 2 == 2);
        let pred: BTreeSet<usize> = pick(&|r| predicted[r - 1]).into_iter().collect();
        let seen: BTreeSet<usize> = pick(&|r| seen[r - 1]).into_iter().collect();
        let pair_id = format!("p{i}");
        predictions.push((pair_id.clone(), pred));
        examples.push(PairExample {
            pair_id,
            doc_id: i / 7,
            features: vec![0.0],
            labels: LabelSet::new(labels, relations).unwrap(),
            true_labels: LabelSet::new(truth, relations).unwrap(),
            seen_in_train: seen,
            difficulty: Difficulty::Easy,
            corrupted: false,
        });
    }
    MetricsCase {
        data: Dataset::new(RelationSchema::numbered(relations).unwrap(), examples, Manifest::custom()),
        predictions: PredictionSet { pairs: predictions },
    }
}

/// Brute-force confusion counts over explicit (pair, relation) fact sets.
pub fn recount(case: &MetricsCase, use_true: bool, drop_seen: bool) -> (usize, usize, usize) {
    let mut gold: HashSet<(String, usize)> = HashSet::new();
    let mut seen: HashSet<(String, usize)> = HashSet::new();
    for ex in &case.data.examples {
        let set = if use_true { &ex.true_labels } else { &ex.labels };
        for &r in set.positives() {
            gold.insert((ex.pair_id.clone(), r));
        }
        for &r in &ex.seen_in_train {
            seen.insert((ex.pair_id.clone(), r));
        }
    }
    let mut predicted: HashSet<(String, usize)> = HashSet::new();
    for (id, set) in &case.predictions.pairs {
        for &r in set {
            predicted.insert((id.clone(), r));
        }
    }
    if drop_seen {
        gold.retain(|f| !seen.contains(f));
        predicted.retain(|f| !seen.contains(f));
    }
    let tp = predicted.intersection(&gold).count();
    (tp, predicted.len() - tp, gold.len() - tp)
}

pub fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    2.0 * p * r / (p + r)
}

pub fn fact_count(case: &MetricsCase) -> usize {
    case.data.examples.len() * case.data.schema.relation_count()
}
