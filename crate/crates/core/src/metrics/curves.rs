//! Threshold sweeps. Scores are oriented so that the positive class sits
//! at the high end: for `Quality::Low` an image is called positive when
//! its score is at or below the threshold, for `Quality::High` when it is
//! at or above. Thresholds are reported in the original score units and
//! bracketed by infinite sentinels (nothing positive / everything
//! positive).

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{LabeledScores, MetricsError, Quality, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    #[serde(serialize_with = "ser_threshold", deserialize_with = "de_threshold")]
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false positive rate, true positive rate), fpr non-decreasing.
    pub points: Vec<CurvePoint>,
    pub auc: f64,
}

/// JSON has no infinities; the sentinels travel as the strings "inf" and
/// "-inf".
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Threshold {
    Finite(f64),
    Named(String),
}

fn ser_threshold<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    match *t {
        f64::INFINITY => s.serialize_str("inf"),
        f64::NEG_INFINITY => s.serialize_str("-inf"),
        v => s.serialize_f64(v),
    }
}

fn de_threshold<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    match Threshold::deserialize(d)? {
        Threshold::Finite(v) => Ok(v),
        Threshold::Named(s) if s == "inf" => Ok(f64::INFINITY),
        Threshold::Named(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Threshold::Named(s) => Err(serde::de::Error::custom(format!("bad threshold {s:?}"))),
    }
}

struct Step {
    threshold: f64,
    tp: u64,
    fp: u64,
}

struct Sweep {
    steps: Vec<Step>,
    positives: u64,
    negatives: u64,
}

fn sweep(scores: &LabeledScores, positive: Quality) -> Result<Sweep> {
    let sign = match positive {
        Quality::High => 1.0,
        Quality::Low => -1.0,
    };
    let oriented: Vec<(f64, bool)> =
        scores.iter().map(|(s, high)| (sign * s, high == (positive == Quality::High))).collect();
    let positives = oriented.iter().filter(|e| e.1).count() as u64;
    let negatives = oriented.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClass { positives: positives as usize, negatives: negatives as usize });
    }
    let mut order: Vec<usize> = (0..oriented.len()).collect();
    order.sort_by(|&a, &b| oriented[b].0.total_cmp(&oriented[a].0));

    let mut steps = vec![Step { threshold: sign * f64::INFINITY, tp: 0, fp: 0 }];
    let (mut tp, mut fp) = (0, 0);
    let mut k = 0;
    while k < order.len() {
        let value = oriented[order[k]].0;
        while k < order.len() && oriented[order[k]].0 == value {
            if oriented[order[k]].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        steps.push(Step { threshold: sign * value, tp, fp });
    }
    steps.push(Step { threshold: sign * f64::NEG_INFINITY, tp, fp });
    Ok(Sweep { steps, positives, negatives })
}

/// ROC points and trapezoidal area. The area is accumulated in integers
/// (twice the concordant count plus ties) and divided once, so it equals
/// the pairwise-concordance statistic exactly.
pub fn roc_curve(scores: &LabeledScores, positive: Quality) -> Result<RocCurve> {
    let Sweep { steps, positives, negatives } = sweep(scores, positive)?;
    let (p, n) = (positives as f64, negatives as f64);
    let points =
        steps.iter().map(|s| CurvePoint { threshold: s.threshold, x: s.fp as f64 / n, y: s.tp as f64 / p }).collect();
    let twice_area: u128 = steps.windows(2).map(|w| (w[1].fp - w[0].fp) as u128 * (w[1].tp + w[0].tp) as u128).sum();
    let auc = twice_area as f64 / (2 * positives as u128 * negatives as u128) as f64;
    Ok(RocCurve { points, auc })
}

/// (recall, precision) points in sweep order, recall non-decreasing. The
/// opening sentinel has no predicted positives; its precision is taken
/// as 1.
pub fn pr_curve(scores: &LabeledScores, positive: Quality) -> Result<Vec<CurvePoint>> {
    let Sweep { steps, positives, .. } = sweep(scores, positive)?;
    Ok(steps
        .iter()
        .map(|s| {
            let predicted = s.tp + s.fp;
            let precision = if predicted == 0 { 1.0 } else { s.tp as f64 / predicted as f64 };
            CurvePoint { threshold: s.threshold, x: s.tp as f64 / positives as f64, y: precision }
        })
        .collect())
}
