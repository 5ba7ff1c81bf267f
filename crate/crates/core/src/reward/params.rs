use rand::RngExt;

use super::RewardHeadConfig;
use crate::linalg::Matrix;
use crate::rng::pcg32;

/// Trainable weights of the reward head.
///
/// Also used as the container for gradients and optimizer moments, which
/// share its shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardHeadParams {
    /// Query projection, `d × d`, applied to generated tokens.
    pub wq: Matrix,
    /// Key projection, `d × d`, applied to original tokens.
    pub wk: Matrix,
    /// Value projection, `d × d`, applied to original tokens.
    pub wv: Matrix,
    /// Hidden layer, `h × 2d`.
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// Output row, `1 × h`.
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Names used for the serialized tensors, in canonical order.
pub(crate) const TENSOR_NAMES: [&str; 7] = ["wq", "wk", "wv", "w1", "b1", "w2", "b2"];

impl RewardHeadParams {
    pub fn zeros(d: usize, hidden: usize) -> Self {
        Self {
            wq: Matrix::zeros(d, d),
            wk: Matrix::zeros(d, d),
            wv: Matrix::zeros(d, d),
            w1: Matrix::zeros(hidden, 2 * d),
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.d(), self.hidden())
    }

    pub fn d(&self) -> usize {
        self.wq.rows()
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    /// Shapes in [`TENSOR_NAMES`] order.
    pub fn shapes(&self) -> [Vec<usize>; 7] {
        let (d, h) = (self.d(), self.hidden());
        [vec![d, d], vec![d, d], vec![d, d], vec![h, 2 * d], vec![h], vec![1, h], vec![1]]
    }

    /// Flat views in [`TENSOR_NAMES`] order.
    pub fn slices(&self) -> [&[f64]; 7] {
        [
            self.wq.as_slice(),
            self.wk.as_slice(),
            self.wv.as_slice(),
            self.w1.as_slice(),
            &self.b1,
            &self.w2,
            std::slice::from_ref(&self.b2),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 7] {
        [
            self.wq.as_mut_slice(),
            self.wk.as_mut_slice(),
            self.wv.as_mut_slice(),
            self.w1.as_mut_slice(),
            &mut self.b1,
            &mut self.w2,
            std::slice::from_mut(&mut self.b2),
        ]
    }

    pub fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Entries in canonical order; used for byte-level comparisons.
    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }
}

/// Xavier-uniform half-width for a `fan_out × fan_in` matrix.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Xavier-uniform weights, zero biases. Matrices are drawn in the order
/// Wq, Wk, Wv, W1, W2 from one PCG32 stream seeded with `config.seed`.
pub fn init_params(config: &RewardHeadConfig) -> RewardHeadParams {
    let (d, h) = (config.d, config.hidden);
    let mut rng = pcg32(config.seed);
    let mut uniform = |rows: usize, cols: usize, bound: f64| {
        Matrix::from_fn(rows, cols, |_, _| bound * (2.0 * rng.random::<f64>() - 1.0))
    };
    let attn = xavier_bound(d, d);
    let wq = uniform(d, d, attn);
    let wk = uniform(d, d, attn);
    let wv = uniform(d, d, attn);
    let w1 = uniform(h, 2 * d, xavier_bound(2 * d, h));
    let w2 = uniform(1, h, xavier_bound(h, 1)).as_slice().to_vec();
    RewardHeadParams { wq, wk, wv, w1, b1: vec![0.0; h], w2, b2: 0.0 }
}
