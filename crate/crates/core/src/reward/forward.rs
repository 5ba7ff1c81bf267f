use super::loss::sigmoid;
use super::{check_threshold, EmbeddingSequence, Fusion, Result, RewardError, RewardHeadParams};
use crate::linalg::{dot, softmax_in_place, Matrix};

/// Fused `2d` feature plus the attention map (rows: generated tokens,
/// columns: original tokens). The map is `None` in concat mode.
#[derive(Debug, Clone)]
pub struct FusionOutput {
    pub fused: Vec<f64>,
    pub attention: Option<Matrix>,
}

/// Intermediate values kept for the backward pass.
pub(super) struct AttentionCache {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    pub attn: Matrix,
}

pub(super) struct ForwardCache {
    pub attention: Option<AttentionCache>,
    pub fused: Vec<f64>,
    pub pre_act: Vec<f64>,
    pub act: Vec<f64>,
    pub score: f64,
}

fn check_widths(p: &RewardHeadParams, ori: &EmbeddingSequence, gen: &EmbeddingSequence) -> Result<()> {
    let d = p.d();
    for w in [ori.width(), gen.width()] {
        if w != d {
            return Err(RewardError::WidthMismatch { expected: d, found: w });
        }
    }
    Ok(())
}

pub(super) fn forward_cached(
    p: &RewardHeadParams,
    ori: &EmbeddingSequence,
    gen: &EmbeddingSequence,
    fusion: Fusion,
) -> Result<ForwardCache> {
    check_widths(p, ori, gen)?;
    let gen_pool = gen.tokens().mean_rows();
    let (attention, ref_pool) = match fusion {
        Fusion::Attention => {
            let q = gen.tokens().matmul_t(&p.wq);
            let k = ori.tokens().matmul_t(&p.wk);
            let v = ori.tokens().matmul_t(&p.wv);
            let scale = 1.0 / (p.d() as f64).sqrt();
            let mut attn = q.matmul_t(&k);
            for i in 0..attn.rows() {
                let row = attn.row_mut(i);
                row.iter_mut().for_each(|s| *s *= scale);
                softmax_in_place(row);
            }
            let context = attn.matmul(&v);
            let pooled = context.mean_rows();
            (Some(AttentionCache { q, k, v, attn }), pooled)
        }
        Fusion::Concat => (None, ori.tokens().mean_rows()),
    };
    let mut fused = gen_pool;
    fused.extend_from_slice(&ref_pool);

    let pre_act: Vec<f64> = p.w1.matvec(&fused).iter().zip(&p.b1).map(|(z, b)| z + b).collect();
    let act: Vec<f64> = pre_act.iter().map(|&z| z.max(0.0)).collect();
    let score = dot(&p.w2, &act) + p.b2;
    Ok(ForwardCache { attention, fused, pre_act, act, score })
}

pub fn attention_fuse(
    p: &RewardHeadParams,
    ori: &EmbeddingSequence,
    gen: &EmbeddingSequence,
    fusion: Fusion,
) -> Result<FusionOutput> {
    let cache = forward_cached(p, ori, gen, fusion)?;
    Ok(FusionOutput { fused: cache.fused, attention: cache.attention.map(|a| a.attn) })
}

/// Raw logit `r = W2·relu(W1·fused + b1) + b2`.
pub fn forward_score(
    p: &RewardHeadParams,
    ori: &EmbeddingSequence,
    gen: &EmbeddingSequence,
    fusion: Fusion,
) -> Result<f64> {
    Ok(forward_cached(p, ori, gen, fusion)?.score)
}

/// Largest f64 below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Background score `σ(r)`, kept strictly inside (0, 1) even where the
/// sigmoid saturates in f64.
pub fn score_pair(
    p: &RewardHeadParams,
    ori: &EmbeddingSequence,
    gen: &EmbeddingSequence,
    fusion: Fusion,
) -> Result<f64> {
    forward_score(p, ori, gen, fusion).map(|r| sigmoid(r).clamp(f64::MIN_POSITIVE, BELOW_ONE))
}

/// `score_pair ≥ theta`; a score exactly at the threshold passes.
pub fn predict_pass(
    p: &RewardHeadParams,
    ori: &EmbeddingSequence,
    gen: &EmbeddingSequence,
    fusion: Fusion,
    theta: f64,
) -> Result<bool> {
    check_threshold(theta)?;
    Ok(score_pair(p, ori, gen, fusion)? >= theta)
}
