use rand::seq::SliceRandom;

use super::{DatasetError, ManifestRecord, Result};
use crate::rng::pcg32;

/// Index lists into the input; `test` holds whatever train and val leave.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Absorbs representation error in products like `0.29 · 100`.
const COUNT_SLACK: f64 = 1e-9;

/// Seeded shuffle, then contiguous train / val / test slices with
/// `floor(fraction · n)` items each. Fractions summing to 1 leave the test
/// slice empty.
pub fn split(n: usize, train: f64, val: f64, seed: u64) -> Result<SplitPlan> {
    let ok = |f: f64| f.is_finite() && f > 0.0;
    if !(ok(train) && ok(val) && train + val <= 1.0 + COUNT_SLACK) {
        return Err(DatasetError::BadFractions { train, val });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut pcg32(seed));
    let n_train = ((train * n as f64 + COUNT_SLACK).floor() as usize).min(n);
    let n_val = if (train + val - 1.0).abs() <= COUNT_SLACK {
        n - n_train
    } else {
        ((val * n as f64 + COUNT_SLACK).floor() as usize).min(n - n_train)
    };
    let test = order.split_off(n_train + n_val);
    let val_part = order.split_off(n_train);
    Ok(SplitPlan { train: order, val: val_part, test })
}

pub fn split_manifest(records: &[ManifestRecord], train: f64, val: f64, seed: u64) -> Result<[Vec<ManifestRecord>; 3]> {
    let plan = split(records.len(), train, val, seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    Ok([pick(&plan.train), pick(&plan.val), pick(&plan.test)])
}
