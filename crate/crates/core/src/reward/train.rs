use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::backward::backward_with_loss;
use super::loss::{pair_scores, sigmoid, total_loss};
use super::params::init_params;
use super::{Fusion, Result, RewardError, RewardHeadConfig, RewardHeadParams, TrainingPair};
use crate::rng::pcg32;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
/// Keeps the shuffle stream independent of the initialization stream.
const SHUFFLE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: RewardHeadParams,
    pub history: Vec<EpochLoss>,
}

struct Adam {
    lr: f64,
    step: i32,
    m: RewardHeadParams,
    v: RewardHeadParams,
}

impl Adam {
    fn new(lr: f64, like: &RewardHeadParams) -> Self {
        Self { lr, step: 0, m: like.zeros_like(), v: like.zeros_like() }
    }

    fn update(&mut self, params: &mut RewardHeadParams, grad: &RewardHeadParams) {
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step);
        let bc2 = 1.0 - BETA2.powi(self.step);
        let grads = grad.slices();
        for (((p, m), v), g) in
            params.slices_mut().into_iter().zip(self.m.slices_mut()).zip(self.v.slices_mut()).zip(grads)
        {
            for i in 0..p.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + EPS);
            }
        }
    }
}

/// Mini-batch Adam over `pairs`, reshuffled every epoch from the config
/// seed. The history holds train (and validation, when given) loss measured
/// on the full sets after each epoch.
pub fn train(pairs: &[TrainingPair], val_pairs: &[TrainingPair], config: &RewardHeadConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(RewardError::EmptyTrainingSet);
    }
    if let Some(w) = pairs.iter().chain(val_pairs).map(TrainingPair::width).find(|&w| w != config.d) {
        return Err(RewardError::WidthMismatch { expected: config.d, found: w });
    }
    let mut params = init_params(config);
    let mut adam = Adam::new(config.learning_rate, &params);
    let mut rng = pcg32(config.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| pairs[i].clone()));
            let (loss, grad) = backward_with_loss(&batch, &params, config.fusion, config.loss)?;
            if !loss.is_finite() || !grad.is_finite() {
                return Err(RewardError::NonFiniteLoss { epoch, batch: b, loss });
            }
            adam.update(&mut params, &grad);
        }
        let train_loss = total_loss(pairs, &params, config.fusion, config.loss)?;
        if !train_loss.is_finite() {
            return Err(RewardError::NonFiniteLoss { epoch, batch: usize::MAX, loss: train_loss });
        }
        let val_loss =
            if val_pairs.is_empty() { None } else { Some(total_loss(val_pairs, &params, config.fusion, config.loss)?) };
        history.push(EpochLoss { epoch, train_loss, val_loss });
    }
    Ok(TrainOutcome { params, history })
}

/// Held-out pair statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    /// Fraction of pairs with `r_good > r_bad`.
    pub ranking_accuracy: f64,
    /// Fraction with `σ(r_good) ≥ 0.5` and `σ(r_bad) < 0.5`.
    pub calibration_rate: f64,
}

pub fn evaluate_pairs(p: &RewardHeadParams, pairs: &[TrainingPair], fusion: Fusion) -> Result<PairMetrics> {
    if pairs.is_empty() {
        return Err(RewardError::EmptyBatch);
    }
    let (mut ranked, mut calibrated) = (0usize, 0usize);
    for pair in pairs {
        let s = pair_scores(p, pair, fusion)?;
        ranked += usize::from(s.good > s.bad);
        calibrated += usize::from(sigmoid(s.good) >= 0.5 && sigmoid(s.bad) < 0.5);
    }
    let n = pairs.len() as f64;
    Ok(PairMetrics { ranking_accuracy: ranked as f64 / n, calibration_rate: calibrated as f64 / n })
}
