//! Hand-derived gradients of the mean pair loss.

use super::forward::{forward_cached, ForwardCache};
use super::loss::{pair_loss, pair_loss_grad};
use super::{EmbeddingSequence, Fusion, LossMode, Result, RewardError, RewardHeadParams, RewardScores, TrainingPair};
use crate::linalg::{add_assign, Matrix};

/// Gradient of [`super::total_loss`] with respect to every parameter.
pub fn backward(
    batch: &[TrainingPair],
    p: &RewardHeadParams,
    fusion: Fusion,
    mode: LossMode,
) -> Result<RewardHeadParams> {
    backward_with_loss(batch, p, fusion, mode).map(|(_, g)| g)
}

/// Mean loss and its gradient from a single forward sweep.
pub fn backward_with_loss(
    batch: &[TrainingPair],
    p: &RewardHeadParams,
    fusion: Fusion,
    mode: LossMode,
) -> Result<(f64, RewardHeadParams)> {
    if batch.is_empty() {
        return Err(RewardError::EmptyBatch);
    }
    let inv_n = 1.0 / batch.len() as f64;
    let mut grad = p.zeros_like();
    let mut loss_sum = 0.0;
    for pair in batch {
        let good = forward_cached(p, &pair.original, &pair.good, fusion)?;
        let bad = forward_cached(p, &pair.original, &pair.bad, fusion)?;
        let scores = RewardScores::new(good.score, bad.score);
        loss_sum += pair_loss(scores, mode);
        let (d_good, d_bad) = pair_loss_grad(scores, mode);
        accumulate(&mut grad, p, &good, &pair.original, &pair.good, d_good * inv_n);
        accumulate(&mut grad, p, &bad, &pair.original, &pair.bad, d_bad * inv_n);
    }
    Ok((loss_sum * inv_n, grad))
}

/// Adds `d_score · ∂r/∂θ` for one scored image into `grad`.
fn accumulate(
    grad: &mut RewardHeadParams,
    p: &RewardHeadParams,
    cache: &ForwardCache,
    ori: &EmbeddingSequence,
    gen: &EmbeddingSequence,
    d_score: f64,
) {
    let d = p.d();
    grad.b2 += d_score;
    for (g, &a) in grad.w2.iter_mut().zip(&cache.act) {
        *g += d_score * a;
    }
    let d_pre: Vec<f64> =
        p.w2.iter().zip(&cache.pre_act).map(|(&w, &z)| if z > 0.0 { d_score * w } else { 0.0 }).collect();
    add_assign(&mut grad.b1, &d_pre);
    for (k, &dz) in d_pre.iter().enumerate() {
        if dz == 0.0 {
            continue;
        }
        for (g, &f) in grad.w1.row_mut(k).iter_mut().zip(&cache.fused) {
            *g += dz * f;
        }
    }

    let Some(att) = &cache.attention else {
        return;
    };
    let d_fused = p.w1.t_matvec(&d_pre);
    let d_pool = &d_fused[d..];
    let t_gen = gen.len();
    // mean-pool: every context row receives d_pool / T_gen
    let d_context = Matrix::from_fn(t_gen, d, |_, j| d_pool[j] / t_gen as f64);
    let d_attn = d_context.matmul_t(&att.v);
    let d_v = att.attn.t_matmul(&d_context);

    let scale = 1.0 / (d as f64).sqrt();
    let mut d_scores = Matrix::zeros(att.attn.rows(), att.attn.cols());
    for t in 0..att.attn.rows() {
        let a = att.attn.row(t);
        let da = d_attn.row(t);
        let inner: f64 = a.iter().zip(da).map(|(x, y)| x * y).sum();
        for (s, out) in d_scores.row_mut(t).iter_mut().enumerate() {
            *out = a[s] * (da[s] - inner) * scale;
        }
    }
    let d_q = d_scores.matmul(&att.k);
    let d_k = d_scores.t_matmul(&att.q);

    grad.wq.add_assign(&d_q.t_matmul(gen.tokens()));
    grad.wk.add_assign(&d_k.t_matmul(ori.tokens()));
    grad.wv.add_assign(&d_v.t_matmul(ori.tokens()));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{init_params, total_loss, RewardHeadConfig};
    use crate::rng::pcg32;
    use rand::RngExt;

    fn random_seq(rng: &mut crate::rng::Pcg32, t: usize, d: usize) -> EmbeddingSequence {
        EmbeddingSequence::new(Matrix::from_fn(t, d, |_, _| 2.0 * rng.random::<f64>() - 1.0)).unwrap()
    }

    /// Central differences on every entry, straight through
    /// `total_loss`.
    fn finite_difference(
        batch: &[TrainingPair],
        p: &RewardHeadParams,
        fusion: Fusion,
        mode: LossMode,
        h: f64,
    ) -> Vec<f64> {
        let mut out = Vec::with_capacity(p.num_params());
        for tensor in 0..7 {
            for idx in 0..p.slices()[tensor].len() {
                let mut plus = p.clone();
                plus.slices_mut()[tensor][idx] += h;
                let mut minus = p.clone();
                minus.slices_mut()[tensor][idx] -= h;
                let lp = total_loss(batch, &plus, fusion, mode).unwrap();
                let lm = total_loss(batch, &minus, fusion, mode).unwrap();
                out.push((lp - lm) / (2.0 * h));
            }
        }
        out
    }

    #[test]
    fn matches_finite_differences() {
        let mut rng = pcg32(42);
        for case in 0..5u64 {
            let cfg = RewardHeadConfig { hidden: 4, seed: case, ..RewardHeadConfig::new(8) };
            let p = init_params(&cfg);
            let batch: Vec<TrainingPair> = (0..4)
                .map(|_| {
                    let o = random_seq(&mut rng, 3, 8);
                    let g = random_seq(&mut rng, 3, 8);
                    let b = random_seq(&mut rng, 3, 8);
                    TrainingPair::new(o, g, b).unwrap()
                })
                .collect();
            for fusion in [Fusion::Attention, Fusion::Concat] {
                for mode in [LossMode::Full, LossMode::RankOnly] {
                    let analytic = backward(&batch, &p, fusion, mode).unwrap().to_flat();
                    let numeric = finite_difference(&batch, &p, fusion, mode, 1e-3);
                    for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
                        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-4);
                        assert!(rel < 1e-3, "case {case} {fusion:?} {mode:?} entry {i}: analytic {a} numeric {n}");
                    }
                }
            }
        }
    }

    #[test]
    fn loss_from_backward_matches_total_loss() {
        let mut rng = pcg32(1);
        let p = init_params(&RewardHeadConfig { hidden: 5, ..RewardHeadConfig::new(4) });
        let batch: Vec<TrainingPair> = (0..3)
            .map(|_| {
                TrainingPair::new(random_seq(&mut rng, 2, 4), random_seq(&mut rng, 3, 4), random_seq(&mut rng, 1, 4))
                    .unwrap()
            })
            .collect();
        let (loss, _) = backward_with_loss(&batch, &p, Fusion::Attention, LossMode::Full).unwrap();
        assert_eq!(loss, total_loss(&batch, &p, Fusion::Attention, LossMode::Full).unwrap());
    }

    #[test]
    fn zero_params_symmetric_inputs_give_finite_gradient() {
        let p = RewardHeadParams::zeros(3, 2);
        let x = EmbeddingSequence::new(Matrix::from_fn(2, 3, |i, j| (i + j) as f64)).unwrap();
        let batch = [TrainingPair::new(x.clone(), x.clone(), x).unwrap()];
        let g = backward(&batch, &p, Fusion::Attention, LossMode::Full).unwrap();
        assert!(g.is_finite());
        // rank terms cancel on b2; classification gives −σ(0) + σ(0) = 0 too
        assert_eq!(g.b2, 0.0);
    }

    #[test]
    fn empty_batch_is_error() {
        let p = RewardHeadParams::zeros(2, 2);
        assert!(matches!(backward(&[], &p, Fusion::Attention, LossMode::Full), Err(RewardError::EmptyBatch)));
    }
}
