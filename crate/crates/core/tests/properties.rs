mod common;

use cmm::encoder::{Architecture, EncoderParams};
use cmm::eval::{ign_f1, micro_f1, GoldView};
use cmm::loss::{self, LossConfig, LossKind};
use cmm::schema::{Dataset, LabelSet};
use cmm::synthdata::{generate, inject_false_negatives, GenConfig};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn cmm_loss_is_nonnegative((row, labels) in row_and_labels(), g in gamma(), m in margin()) {
        nonnegative(&row, &labels, g, m)?;
    }

    #[test]
    fn shift_leaves_distances_losses_and_decode_unchanged(
        (row, labels) in row_and_labels(), g in gamma(), m in margin(), c in -50.0f64..50.0,
    ) {
        shift_invariant(&row, &labels, g, m, c)?;
    }

    #[test]
    fn positive_term_strictly_decreasing(d in -20.0f64..20.0, gap in 1e-3f64..5.0, g in gamma()) {
        positive_monotone(d, gap, g)?;
    }

    #[test]
    fn clamped_negatives_are_inert(m in margin(), excess in 0.0f64..20.0, g in gamma()) {
        negative_clamp(m, excess, g)?;
    }

    #[test]
    fn larger_gamma_larger_positive_loss(d in -20.0f64..20.0, g in gamma(), dg in 0.05f64..2.0) {
        gamma_ordering(d, g, dg)?;
    }

    #[test]
    fn gamma_zero_and_small_m_reduce_to_log_sigmoid((row, labels) in row_and_labels()) {
        reductions(&row, &labels)?;
    }

    #[test]
    fn decode_is_strict_threshold_scan((row, _) in row_and_labels()) {
        decode_matches_scan(&row)?;
    }

    #[test]
    fn negative_rescale_stays_in_range(d in -40.0f64..40.0, m in margin()) {
        let q = loss::cmm_rescale(d, loss::Side::Negative, m);
        prop_assert!(q > m.ln() - 1e-12 && q <= 0.0, "q = {q}");
    }

    #[test]
    fn atl_and_plain_losses_bounded_as_expected((row, labels) in row_and_labels()) {
        prop_assert!(loss::atl_reference_loss(&row, &labels).unwrap() >= 0.0);
        let plain = loss::plain_margin_loss(&row, &labels).unwrap();
        let d = loss::margin_distances(&row, &labels).unwrap();
        let sum: f64 = d.d_pos.values().chain(d.d_neg.values()).sum();
        prop_assert!((plain + sum).abs() < 1e-12);
    }

    #[test]
    fn plain_gradient_entries_are_unit((row, labels) in row_and_labels()) {
        let g = loss::plain_margin_grad(&row, &labels).unwrap();
        let r = labels.relation_count();
        prop_assert!(g[1..].iter().all(|&v| v == 1.0 || v == -1.0));
        let expected_th = labels.positives().len() as f64 - (r - labels.positives().len()) as f64;
        prop_assert_eq!(g[0], expected_th);
    }

    #[test]
    fn gradients_sum_to_zero((row, labels) in row_and_labels(), g in gamma(), m in margin()) {
        // Every loss depends only on logit differences.
        let cfg = LossConfig::cmm(g, m);
        for kind in [LossKind::PlainMargin, LossKind::Cmm, LossKind::AtlReference] {
            let grad = loss::builtin(kind).unwrap().gradient(&row, &labels, &cfg).unwrap();
            let scale: f64 = grad.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(grad.iter().sum::<f64>().abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn ign_with_no_flags_equals_micro(case in metrics_case()) {
        let mut case = case;
        for ex in &mut case.data.examples {
            ex.seen_in_train.clear();
        }
        for gold in [GoldView::Labels, GoldView::TrueLabels] {
            let micro = micro_f1(&case.predictions, &case.data, gold).unwrap();
            let ign = ign_f1(&case.predictions, &case.data, gold).unwrap();
            prop_assert_eq!(micro, ign);
            prop_assert_eq!(micro.f1.to_bits(), micro.ign_f1.to_bits());
        }
    }

    #[test]
    fn encoder_emits_one_logit_per_relation_plus_th(
        input in 1usize..10, relations in 1usize..8, hidden in prop::option::of(1usize..6), seed: u64,
    ) {
        let arch = match hidden {
            Some(h) => Architecture::OneHidden { hidden: h },
            None => Architecture::Linear,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = EncoderParams::init(arch, input, relations + 1, &mut rng).unwrap();
        let row = params.encode(&vec![0.5; input]).unwrap();
        prop_assert_eq!(row.values().len(), relations + 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generation_is_deterministic_and_injection_only_shrinks(seed: u64, rate in 0.0f64..0.9) {
        let cfg = GenConfig {
            n_documents: 4,
            pairs_per_document: 30,
            positive_rate: 0.2,
            seed,
            ..GenConfig::docred_mixed()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        prop_assert_eq!(a.to_jsonl_bytes().unwrap(), b.to_jsonl_bytes().unwrap());

        let noisy = inject_false_negatives(&a, rate, seed.rotate_left(7)).unwrap();
        for (before, after) in a.examples.iter().zip(&noisy.examples) {
            prop_assert_eq!(&before.true_labels, &after.true_labels);
            prop_assert!(after.labels.positives().is_subset(before.labels.positives()));
            prop_assert_eq!(after.corrupted, after.labels != before.labels);
        }

        let back = Dataset::read_jsonl(noisy.to_jsonl_bytes().unwrap().as_slice()).unwrap();
        prop_assert_eq!(back, noisy);
    }

    #[test]
    fn label_sets_partition_relations(r in 1usize..30, flags in prop::collection::vec(any::<bool>(), 30)) {
        let positives: Vec<usize> = (1..=r).filter(|&i| flags[i - 1]).collect();
        let set = LabelSet::new(positives, r).unwrap();
        prop_assert!(set.partition_errors().is_empty());
        prop_assert_eq!(set.positives().len() + set.negatives().len(), r);
        prop_assert!(set.positives().is_disjoint(set.negatives()));
    }
}
