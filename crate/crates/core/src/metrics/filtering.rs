//! Filter bookkeeping. An image is *filtered* when the gate predicts a
//! fail; precision and recall are then measured against human labels.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use super::LabeledScores;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub n_filtered: u64,
    /// Filtered images whose human label is fail.
    pub n_filtered_low: u64,
    pub n_orig_low: u64,
    /// Kept (not filtered) images whose human label is pass.
    pub n_kept_high: u64,
    pub n_orig_high: u64,
}

impl FilterCounts {
    /// Tallies (kept, human label) decisions.
    pub fn from_decisions(items: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Self::default();
        for (kept, high) in items {
            if high {
                c.n_orig_high += 1;
                c.n_kept_high += kept as u64;
            } else {
                c.n_orig_low += 1;
                c.n_filtered_low += !kept as u64;
            }
            c.n_filtered += !kept as u64;
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.n_orig_low + self.n_orig_high
    }
}

/// Filtered iff `score < theta`.
pub fn filter_counts(scores: &LabeledScores, theta: f64) -> FilterCounts {
    FilterCounts::from_decisions(scores.iter().map(|(s, high)| (s >= theta, high)))
}

/// An exact ratio of counts. `value` is `None` for 0/0. Serialized with
/// both counts plus the quotient (`null` when undefined).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct Rate {
    pub numerator: u64,
    pub denominator: u64,
}

impl Rate {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        Self { numerator, denominator }
    }

    pub fn value(&self) -> Option<f64> {
        (self.denominator > 0).then(|| self.numerator as f64 / self.denominator as f64)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Rate", 3)?;
        s.serialize_field("numerator", &self.numerator)?;
        s.serialize_field("denominator", &self.denominator)?;
        s.serialize_field("value", &self.value())?;
        s.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRates {
    /// Share of filtered images that were low quality.
    pub pb: Rate,
    /// Share of low-quality images that were filtered.
    pub rb: Rate,
    /// Share of high-quality images that were kept.
    pub rg: Rate,
}

pub fn pb_rb_rg(c: &FilterCounts) -> FilterRates {
    FilterRates {
        pb: Rate::new(c.n_filtered_low, c.n_filtered),
        rb: Rate::new(c.n_filtered_low, c.n_orig_low),
        rg: Rate::new(c.n_kept_high, c.n_orig_high),
    }
}
