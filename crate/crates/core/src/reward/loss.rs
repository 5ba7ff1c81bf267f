//! Pairwise ranking and classification losses on raw logits.

use super::forward::forward_cached;
use super::{Fusion, LossMode, Result, RewardError, RewardHeadParams, TrainingPair};

/// Logits of the passing (`good`) and failing (`bad`) image of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardScores {
    pub good: f64,
    pub bad: f64,
}

impl RewardScores {
    pub fn new(good: f64, bad: f64) -> Self {
        Self { good, bad }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eˣ)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Cross-entropy of `softmax([good, bad])` against target `[1, 0]`.
pub fn rank_loss(s: RewardScores) -> f64 {
    softplus(s.bad - s.good)
}

/// `BCE(σ(good), 1) + BCE(σ(bad), 0)`.
pub fn class_loss(s: RewardScores) -> f64 {
    softplus(-s.good) + softplus(s.bad)
}

pub fn pair_loss(s: RewardScores, mode: LossMode) -> f64 {
    match mode {
        LossMode::Full => rank_loss(s) + class_loss(s),
        LossMode::RankOnly => rank_loss(s),
    }
}

/// `(∂L/∂good, ∂L/∂bad)` for one pair.
pub(super) fn pair_loss_grad(s: RewardScores, mode: LossMode) -> (f64, f64) {
    let p = sigmoid(s.bad - s.good);
    let (mut d_good, mut d_bad) = (-p, p);
    if mode == LossMode::Full {
        d_good -= sigmoid(-s.good);
        d_bad += sigmoid(s.bad);
    }
    (d_good, d_bad)
}

pub(super) fn pair_scores(p: &RewardHeadParams, pair: &TrainingPair, fusion: Fusion) -> Result<RewardScores> {
    let good = forward_cached(p, &pair.original, &pair.good, fusion)?.score;
    let bad = forward_cached(p, &pair.original, &pair.bad, fusion)?.score;
    Ok(RewardScores { good, bad })
}

/// Mean per-pair loss; pairs are summed in batch order.
pub fn total_loss(batch: &[TrainingPair], p: &RewardHeadParams, fusion: Fusion, mode: LossMode) -> Result<f64> {
    if batch.is_empty() {
        return Err(RewardError::EmptyBatch);
    }
    let mut sum = 0.0;
    for pair in batch {
        sum += pair_loss(pair_scores(p, pair, fusion)?, mode);
    }
    Ok(sum / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::reward::{init_params, EmbeddingSequence, RewardHeadConfig};
    use std::f64::consts::LN_2;

    fn s(good: f64, bad: f64) -> RewardScores {
        RewardScores::new(good, bad)
    }

    #[test]
    fn rank_loss_values() {
        assert!((rank_loss(s(0.3, 0.3)) - LN_2).abs() < 1e-15);
        assert!((rank_loss(s(0.3, 0.3)) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(rank_loss(s(40.0, 0.0)) < 1e-12);
        // ln(1 + e)
        assert!((rank_loss(s(0.0, 1.0)) - 1.313262).abs() < 1e-6);
        assert!((rank_loss(s(0.0, 1.0)) - (1.0 + 1f64.exp()).ln()).abs() < 1e-15);
    }

    #[test]
    fn class_loss_values() {
        assert!((class_loss(s(0.0, 0.0)) - 2.0 * LN_2).abs() < 1e-15);
        assert!((class_loss(s(0.0, 0.0)) - 1.386294).abs() < 1e-6);
        assert!(class_loss(s(40.0, -40.0)) < 1e-12);
        let expected = 2.0 * (1.0 + (-1f64).exp()).ln();
        assert!((class_loss(s(1.0, -1.0)) - expected).abs() < 1e-15);
        assert!((class_loss(s(1.0, -1.0)) - 0.626523).abs() < 1e-6);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!(softplus(-1000.0) >= 0.0);
    }

    #[test]
    fn shift_invariance() {
        let base = s(0.7, -0.4);
        let shifted = s(0.7 + 3.0, -0.4 + 3.0);
        assert!((rank_loss(base) - rank_loss(shifted)).abs() < 1e-14);
        assert!((class_loss(base) - class_loss(shifted)).abs() > 1e-3);
    }

    #[test]
    fn swapping_good_and_bad() {
        for (g, b) in [(0.0, 0.0), (1.0, -2.0), (5.0, 4.5), (-3.0, 10.0)] {
            let sum = rank_loss(s(g, b)) + rank_loss(s(b, g));
            assert!(sum >= 2.0 * LN_2 - 1e-15);
        }
    }

    #[test]
    fn rank_grad_at_equal_scores() {
        let (dg, db) = pair_loss_grad(s(0.2, 0.2), LossMode::RankOnly);
        assert_eq!(dg, -0.5);
        assert_eq!(db, 0.5);
    }

    fn pair(seed: f64) -> TrainingPair {
        let m =
            |off: f64| EmbeddingSequence::new(Matrix::from_fn(2, 3, |i, j| ((i * 3 + j) as f64 + off).sin())).unwrap();
        TrainingPair::new(m(seed), m(seed + 1.0), m(seed + 2.0)).unwrap()
    }

    #[test]
    fn total_loss_reductions() {
        let p = init_params(&RewardHeadConfig { hidden: 4, seed: 3, ..RewardHeadConfig::new(3) });
        let one = pair(0.5);
        let scores = pair_scores(&p, &one, Fusion::Attention).unwrap();
        let single = total_loss(std::slice::from_ref(&one), &p, Fusion::Attention, LossMode::Full).unwrap();
        assert_eq!(single, rank_loss(scores) + class_loss(scores));
        let twice = total_loss(&[one.clone(), one.clone()], &p, Fusion::Attention, LossMode::Full).unwrap();
        assert!((twice - single).abs() <= 1e-15 * single.abs());

        let batch = [pair(0.1), pair(0.9), pair(2.0)];
        let mean = total_loss(&batch, &p, Fusion::Attention, LossMode::Full).unwrap();
        let per: Vec<f64> = batch
            .iter()
            .map(|b| total_loss(std::slice::from_ref(b), &p, Fusion::Attention, LossMode::Full).unwrap())
            .collect();
        assert_eq!(mean, per.iter().sum::<f64>() / 3.0);
        assert!(mean >= 0.0);
        assert!(matches!(total_loss(&[], &p, Fusion::Attention, LossMode::Full), Err(RewardError::EmptyBatch)));
    }
}
