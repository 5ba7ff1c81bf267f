//! Agreement between gate scores and human labels: correlation
//! coefficients, filter precision / recall rates, ROC and PR curves, and
//! the on-disk report.

mod correlation;
mod curves;
mod filtering;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{average_ranks, plcc, srcc};
pub use curves::{pr_curve, roc_curve, CurvePoint, RocCurve};
pub use filtering::{filter_counts, pb_rb_rg, FilterCounts, FilterRates, Rate};
pub use report::{
    emit_report, load_report, read_json, render_svg, to_json_bytes, write_csv, write_json, CurveSet, Evaluation,
    EvaluationReport, GateConfig, GateMetrics, ImageVerdict, Report, ReportFormat, ReportMetrics, EVALUATION_FILE,
    REPORT_FILE,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least 2 samples, found {0}")]
    TooShort(usize),
    #[error("{0} has zero variance")]
    ConstantInput(&'static str),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("curve needs both classes: {positives} positive, {negatives} negative")]
    SingleClass { positives: usize, negatives: usize },
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Which class a curve treats as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Low,
    High,
}

/// One score per image with its human label (`true` = passed review).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(MetricsError::LengthMismatch { x: scores.len(), y: labels.len() });
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(MetricsError::NonFinite(i));
        }
        Ok(Self { scores, labels })
    }

    pub fn from_pairs(entries: &[(f64, bool)]) -> Result<Self> {
        Self::new(entries.iter().map(|e| e.0).collect(), entries.iter().map(|e| e.1).collect())
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, bool)> + '_ {
        self.scores.iter().copied().zip(self.labels.iter().copied())
    }
}
