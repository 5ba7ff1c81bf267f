//! Image-referenced reward head.
//!
//! A generated image is scored against its original: generated tokens
//! attend over the original tokens (single-head cross-attention), both
//! streams are mean-pooled and concatenated, and a one-hidden-layer MLP maps
//! the fused vector to a scalar logit. The same head scores the passing and
//! the failing image of a training pair, and the two logits feed a ranking
//! cross-entropy plus a per-image sigmoid classification term.

mod backward;
mod bundle;
mod forward;
mod loss;
mod params;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::tensor_io::TensorF32;

pub use backward::{backward, backward_with_loss};
pub use bundle::{load_bundle, quantize_f32, save_bundle, BundleError, BUNDLE_HEADER, CONFIG_FILE};
pub use forward::{attention_fuse, forward_score, predict_pass, score_pair, FusionOutput};
pub use loss::{class_loss, pair_loss, rank_loss, sigmoid, softplus, total_loss, RewardScores};
pub use params::{init_params, xavier_bound, RewardHeadParams};
pub use train::{evaluate_pairs, train, EpochLoss, PairMetrics, TrainOutcome};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("embedding width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("embedding tensor must have shape [T, d] or [d], found {0:?}")]
    BadEmbeddingShape(Vec<usize>),
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid pass threshold {0}: must lie in (0, 1)")]
    InvalidThreshold(f64),
    #[error("non-finite loss at epoch {epoch}, batch {batch} (loss = {loss})")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
}

pub type Result<T> = std::result::Result<T, RewardError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Fusion {
    /// Cross-attention of generated tokens over original tokens.
    #[default]
    Attention,
    /// Ablation: concatenate mean-pooled generated and original features.
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LossMode {
    /// Ranking cross-entropy plus classification BCE.
    #[default]
    Full,
    /// Ablation: ranking cross-entropy only.
    RankOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardHeadConfig {
    /// Embedding width `d`.
    pub d: usize,
    /// MLP hidden width.
    pub hidden: usize,
    pub fusion: Fusion,
    pub loss: LossMode,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Background passes when `σ(r) ≥ pass_threshold`.
    pub pass_threshold: f64,
}

impl RewardHeadConfig {
    pub const DEFAULT_HIDDEN: usize = 32;
    pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;
    pub const DEFAULT_EPOCHS: usize = 100;
    pub const DEFAULT_BATCH_SIZE: usize = 16;
    pub const DEFAULT_PASS_THRESHOLD: f64 = 0.5;

    /// Default hyperparameters for embeddings of width `d`.
    pub fn new(d: usize) -> Self {
        Self {
            d,
            hidden: Self::DEFAULT_HIDDEN,
            fusion: Fusion::Attention,
            loss: LossMode::Full,
            learning_rate: Self::DEFAULT_LEARNING_RATE,
            epochs: Self::DEFAULT_EPOCHS,
            batch_size: Self::DEFAULT_BATCH_SIZE,
            seed: 0,
            pass_threshold: Self::DEFAULT_PASS_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(RewardHeadConfig::invalid(msg));
        if self.d == 0 {
            return bad("d must be positive");
        }
        if self.hidden == 0 {
            return bad("hidden must be positive");
        }
        // lr = 0 is accepted: it freezes the parameters.
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be a finite non-negative number");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        check_threshold(self.pass_threshold)
    }

    fn invalid(msg: &str) -> RewardError {
        RewardError::InvalidConfig(msg.to_string())
    }
}

/// Background pass thresholds must lie strictly inside (0, 1).
pub fn check_threshold(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(RewardError::InvalidThreshold(theta))
    }
}

/// `T × d` token features of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence(Matrix);

impl EmbeddingSequence {
    pub fn new(tokens: Matrix) -> Result<Self> {
        if tokens.rows() == 0 || tokens.cols() == 0 {
            return Err(RewardError::BadEmbeddingShape(vec![tokens.rows(), tokens.cols()]));
        }
        Ok(Self(tokens))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(RewardError::BadEmbeddingShape(vec![t, d]));
        }
        Self::new(Matrix::from_vec(t, d, rows.concat()))
    }

    /// Accepts `[T, d]` tensors, or `[d]` as a single pooled token.
    pub fn from_tensor(t: &TensorF32) -> Result<Self> {
        let (rows, cols) = match *t.dims() {
            [d] => (1, d),
            [n, d] => (n, d),
            _ => return Err(RewardError::BadEmbeddingShape(t.dims().to_vec())),
        };
        Self::new(Matrix::from_vec(rows, cols, t.data().iter().map(|&v| v as f64).collect()))
    }

    pub fn to_tensor(&self) -> TensorF32 {
        let data = self.0.as_slice().iter().map(|&v| v as f32).collect();
        TensorF32::new(vec![self.0.rows(), self.0.cols()], data).expect("embedding entries are finite")
    }

    pub fn tokens(&self) -> &Matrix {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }

    pub fn width(&self) -> usize {
        self.0.cols()
    }
}

/// One original with a human-passed and a human-failed generation.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub original: EmbeddingSequence,
    pub good: EmbeddingSequence,
    pub bad: EmbeddingSequence,
}

impl TrainingPair {
    pub fn new(original: EmbeddingSequence, good: EmbeddingSequence, bad: EmbeddingSequence) -> Result<Self> {
        let d = original.width();
        for w in [good.width(), bad.width()] {
            if w != d {
                return Err(RewardError::WidthMismatch { expected: d, found: w });
            }
        }
        Ok(Self { original, good, bad })
    }

    pub fn width(&self) -> usize {
        self.original.width()
    }
}
