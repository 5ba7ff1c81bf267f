//! Property checks over the public API.

use hfpc_core::consistency::match_masks;
use hfpc_core::dataset::{
    balance, build_pairs, kmeans, split, BalanceTarget, GeneratedImage, KMeansOptions, ManifestRecord,
};
use hfpc_core::linalg::Matrix;
use hfpc_core::metrics::{filter_counts, pb_rb_rg, pr_curve, roc_curve, LabeledScores, Quality};
use hfpc_core::reward::{
    init_params, pair_loss, rank_loss, score_pair, total_loss, EmbeddingSequence, RewardScores, TrainingPair,
};
use hfpc_core::tensor_io::{read_tensor, write_tensor};
use hfpc_core::{BinaryMask, ConsistencyConfig, Fusion, LossMode, MaskSet, RewardHeadConfig, TensorF32};
use proptest::prelude::*;

fn seq(values: &[f64], t: usize, d: usize) -> EmbeddingSequence {
    EmbeddingSequence::new(Matrix::from_vec(t, d, values[..t * d].to_vec())).unwrap()
}

fn record(labels: &[u8]) -> ManifestRecord {
    ManifestRecord {
        id: "r".into(),
        original_embedding: "o.hft".into(),
        original_image: "o.ppm".into(),
        original_masks: vec![],
        generated: labels
            .iter()
            .map(|&label| GeneratedImage { embedding: "g.hft".into(), image: "g.ppm".into(), masks: vec![], label })
            .collect(),
        cluster_id: None,
        augmented: false,
    }
}

fn rect_mask(w: usize, h: usize, r: (usize, usize, usize, usize)) -> BinaryMask {
    let (x0, y0) = (r.0 % w, r.1 % h);
    let (x1, y1) = (x0 + 1 + r.2 % (w - x0), y0 + 1 + r.3 % (h - y0));
    BinaryMask::from_fn(w, h, |x, y| x >= x0 && x < x1 && y >= y0 && y < y1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn swapped_rank_losses_sum_to_at_least_two_ln_two(g in -30.0f64..30.0, b in -30.0f64..30.0) {
        let total = rank_loss(RewardScores::new(g, b)) + rank_loss(RewardScores::new(b, g));
        prop_assert!(total >= 2.0 * std::f64::consts::LN_2 - 1e-12);
    }

    #[test]
    fn rank_loss_depends_only_on_the_gap(g in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0) {
        let a = rank_loss(RewardScores::new(g, b));
        let shifted = rank_loss(RewardScores::new(g + c, b + c));
        prop_assert!((a - shifted).abs() < 1e-9);
    }

    #[test]
    fn total_loss_is_the_mean_of_pair_losses(
        values in prop::collection::vec(-2.0f64..2.0, 3 * 2 * 4 * 3),
        seed in 0u64..1000,
        rank_only in any::<bool>(),
    ) {
        let d = 4;
        let mode = if rank_only { LossMode::RankOnly } else { LossMode::Full };
        let p = init_params(&RewardHeadConfig { hidden: 3, seed, ..RewardHeadConfig::new(d) });
        let batch: Vec<TrainingPair> = values
            .chunks(3 * 2 * d)
            .map(|c| TrainingPair::new(seq(c, 2, d), seq(&c[8..], 2, d), seq(&c[16..], 2, d)).unwrap())
            .collect();
        let singles: Vec<f64> = batch.iter().map(|pr| total_loss(std::slice::from_ref(pr), &p, Fusion::Attention, mode).unwrap()).collect();
        let mean = singles.iter().sum::<f64>() / singles.len() as f64;
        prop_assert!((total_loss(&batch, &p, Fusion::Attention, mode).unwrap() - mean).abs() < 1e-12);
        prop_assert!(pair_loss(RewardScores::new(0.0, 0.0), mode) > 0.0);
    }

    #[test]
    fn scores_stay_inside_the_unit_interval(values in prop::collection::vec(-50.0f64..50.0, 24), seed in 0u64..100) {
        let p = init_params(&RewardHeadConfig { hidden: 4, seed, ..RewardHeadConfig::new(4) });
        for fusion in [Fusion::Attention, Fusion::Concat] {
            let s = score_pair(&p, &seq(&values, 3, 4), &seq(&values[12..], 3, 4), fusion).unwrap();
            prop_assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn balance_never_drops_and_reaches_target(assign in prop::collection::vec(0usize..4, 4..40), seed in any::<u64>()) {
        let k = 4;
        prop_assume!((0..k).all(|c| assign.contains(&c)));
        let out = balance(&assign, k, seed, BalanceTarget::Max, None).unwrap();
        let originals: Vec<usize> = out.iter().filter(|e| !e.augmented).map(|e| e.source).collect();
        prop_assert_eq!(originals, (0..assign.len()).collect::<Vec<_>>());
        let largest = (0..k).map(|c| assign.iter().filter(|&&a| a == c).count()).max().unwrap();
        for c in 0..k {
            prop_assert_eq!(out.iter().filter(|e| e.cluster == c).count(), largest);
        }
        prop_assert!(out.iter().all(|e| assign[e.source] == e.cluster));
    }

    #[test]
    fn pair_count_is_pass_times_fail(labels in prop::collection::vec(prop::collection::vec(0u8..=1, 1..6), 1..8)) {
        let records: Vec<ManifestRecord> = labels.iter().map(|l| record(l)).collect();
        let plan = build_pairs(&records);
        let expect: usize = labels
            .iter()
            .map(|l| l.iter().filter(|&&x| x == 1).count() * l.iter().filter(|&&x| x == 0).count())
            .sum();
        prop_assert_eq!(plan.pairs.len(), expect);
        prop_assert_eq!(plan.skipped.len(), labels.iter().filter(|l| !l.contains(&0) || !l.contains(&1)).count());
    }

    #[test]
    fn split_partitions_the_input(n in 0usize..200, train in 0.05f64..0.9, seed in any::<u64>()) {
        let val = (1.0 - train) / 2.0;
        let plan = split(n, train, val, seed).unwrap();
        prop_assert_eq!(plan.train.len(), (train * n as f64 + 1e-9).floor() as usize);
        let mut all: Vec<usize> = plan.train.iter().chain(&plan.val).chain(&plan.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn kmeans_trace_is_monotone(points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 6..40), k in 1usize..5, seed in any::<u64>()) {
        let model = kmeans(&points, k, seed, KMeansOptions::default()).unwrap();
        prop_assert!(model.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].max(1.0)));
        prop_assert!(model.assignments.iter().all(|&a| a < k));
        prop_assert_eq!(model.assignments.len(), points.len());
    }

    #[test]
    fn auc_is_the_concordance_rate(entries in prop::collection::vec((0u8..6, any::<bool>()), 2..50)) {
        let pairs: Vec<(f64, bool)> = entries.iter().map(|&(s, l)| (s as f64 / 5.0, l)).collect();
        prop_assume!(pairs.iter().any(|e| e.1) && pairs.iter().any(|e| !e.1));
        let ls = LabeledScores::from_pairs(&pairs).unwrap();
        let (mut twice, mut n) = (0u64, 0u64);
        for a in pairs.iter().filter(|e| e.1) {
            for b in pairs.iter().filter(|e| !e.1) {
                n += 1;
                twice += if a.0 > b.0 { 2 } else if a.0 == b.0 { 1 } else { 0 };
            }
        }
        prop_assert_eq!(roc_curve(&ls, Quality::High).unwrap().auc, twice as f64 / (2 * n) as f64);
        for q in [Quality::Low, Quality::High] {
            let pr = pr_curve(&ls, q).unwrap();
            prop_assert!(pr.windows(2).all(|w| w[0].x <= w[1].x));
            let roc = roc_curve(&ls, q).unwrap();
            prop_assert!(roc.points.windows(2).all(|w| w[0].x <= w[1].x && w[0].y <= w[1].y));
        }
    }

    #[test]
    fn raising_theta_trades_rg_for_rb(entries in prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..40), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let ls = LabeledScores::from_pairs(&entries).unwrap();
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let (a, b) = (pb_rb_rg(&filter_counts(&ls, lo)), pb_rb_rg(&filter_counts(&ls, hi)));
        prop_assert!(b.rb.numerator >= a.rb.numerator && b.rb.denominator == a.rb.denominator);
        prop_assert!(b.rg.numerator <= a.rg.numerator && b.rg.denominator == a.rg.denominator);
    }

    #[test]
    fn hft_roundtrip(dims in prop::collection::vec(1usize..5, 1..4), fill in -1e6f32..1e6) {
        let n: usize = dims.iter().product();
        let data: Vec<f32> = (0..n).map(|i| fill * i as f32 - 0.5).collect();
        let t = TensorF32::new(dims, data).unwrap();
        let mut bytes = Vec::new();
        write_tensor(&t, &mut bytes).unwrap();
        prop_assert_eq!(read_tensor(&bytes[..]).unwrap(), t);
    }

    #[test]
    fn matching_partitions_indices(
        ori in prop::collection::vec((0usize..10, 0usize..10, 0usize..10, 0usize..10), 0..6),
        gen in prop::collection::vec((0usize..10, 0usize..10, 0usize..10, 0usize..10), 0..6),
    ) {
        let set = |rs: &[(usize, usize, usize, usize)]| MaskSet::new(rs.iter().map(|&r| rect_mask(10, 10, r)).collect()).unwrap();
        let out = match_masks(&set(&ori), &set(&gen), &ConsistencyConfig::default()).unwrap();
        let mut o: Vec<usize> = out.pairs.iter().map(|p| p.ori_index).chain(out.unmatched_ori.iter().copied()).collect();
        let mut g: Vec<usize> = out.pairs.iter().map(|p| p.gen_index).chain(out.unmatched_gen.iter().copied()).collect();
        o.sort_unstable();
        g.sort_unstable();
        prop_assert_eq!(o, (0..ori.len()).collect::<Vec<_>>());
        prop_assert_eq!(g, (0..gen.len()).collect::<Vec<_>>());
    }
}
