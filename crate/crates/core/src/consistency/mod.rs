//! Product-consistency check between an original and a generated image.
//!
//! Product masks of both images are paired by a maximum-score assignment
//! (IoU minus a weighted centroid distance). The mean absolute pixel
//! difference over each matched region then decides whether the product
//! survived the background replacement.

mod assess;
mod assignment;
mod geometry;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor_io::BinaryMask;

pub use assess::{assess_consistency, pair_pixel_diff, ConsistencyResult, Diagnostic};
pub use assignment::{hungarian_max, match_masks, MatchOutcome, MatchedPair, EXACT_ASSIGNMENT_LIMIT};
pub use geometry::{centroid, centroid_dist, iou};

#[derive(Debug, Error, PartialEq)]
pub enum ConsistencyError {
    #[error("{what}: dimension mismatch, expected {expected:?}, found {found:?}")]
    DimensionMismatch { what: &'static str, expected: (usize, usize), found: (usize, usize) },
    #[error("mask {index} is empty")]
    EmptyMask { index: usize },
    #[error("empty mask")]
    EmptyRegion,
    #[error("invalid consistency config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, ConsistencyError>;

/// How per-pair pixel differences are combined before thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DiffAggregate {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    /// Weight on normalized centroid distance in the match score.
    pub lambda_dist: f64,
    /// Minimum IoU for a pair to be eligible.
    pub tau_match: f64,
    /// Maximum allowed (aggregated) mean pixel difference.
    pub delta_diff: f64,
    /// Unmatched generated masks below this fraction of the image are ignored.
    pub area_floor: f64,
    #[serde(default)]
    pub aggregate: DiffAggregate,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self { lambda_dist: 0.5, tau_match: 0.1, delta_diff: 0.05, area_floor: 0.001, aggregate: DiffAggregate::Max }
    }
}

impl ConsistencyConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(ConsistencyError::InvalidConfig(m));
        if !(self.lambda_dist.is_finite() && self.lambda_dist >= 0.0) {
            return fail(format!("lambda_dist must be a finite non-negative number, got {}", self.lambda_dist));
        }
        if !(0.0..=1.0).contains(&self.tau_match) {
            return fail(format!("tau_match must lie in [0, 1], got {}", self.tau_match));
        }
        if !(0.0..=1.0).contains(&self.delta_diff) {
            return fail(format!("delta_diff must lie in [0, 1], got {}", self.delta_diff));
        }
        if !(0.0..1.0).contains(&self.area_floor) {
            return fail(format!("area_floor must lie in [0, 1), got {}", self.area_floor));
        }
        Ok(())
    }
}

/// Product masks of one image; all share dimensions and none is empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MaskSet {
    masks: Vec<BinaryMask>,
}

impl MaskSet {
    pub fn new(masks: Vec<BinaryMask>) -> Result<Self> {
        if let Some(first) = masks.first() {
            let dims = (first.width(), first.height());
            for (index, m) in masks.iter().enumerate() {
                if (m.width(), m.height()) != dims {
                    return Err(ConsistencyError::DimensionMismatch {
                        what: "mask set",
                        expected: dims,
                        found: (m.width(), m.height()),
                    });
                }
                if m.area() == 0 {
                    return Err(ConsistencyError::EmptyMask { index });
                }
            }
        }
        Ok(Self { masks })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn masks(&self) -> &[BinaryMask] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// `(width, height)`, or `None` for an empty set.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.masks.first().map(|m| (m.width(), m.height()))
    }
}
