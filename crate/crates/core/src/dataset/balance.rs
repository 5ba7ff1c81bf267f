//! Oversampling of under-represented clusters.

use rand::RngExt;

use super::{DatasetError, ManifestRecord, Result};
use crate::rng::pcg32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceTarget {
    /// Size of the largest cluster.
    Max,
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BalanceEntry {
    /// Index into the input records.
    pub source: usize,
    pub cluster: usize,
    pub augmented: bool,
}

/// Brings every cluster up to `target` (optionally capped) by sampling its
/// own members with replacement. Output: all input records in order, then
/// the duplicates grouped by ascending cluster id. Nothing is dropped.
pub fn balance(
    assignments: &[usize],
    k: usize,
    seed: u64,
    target: BalanceTarget,
    cap: Option<usize>,
) -> Result<Vec<BalanceEntry>> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (index, &c) in assignments.iter().enumerate() {
        if c >= k {
            return Err(DatasetError::AssignmentOutOfRange { index, value: c, k });
        }
        members[c].push(index);
    }
    let mut goal = match target {
        BalanceTarget::Max => members.iter().map(Vec::len).max().unwrap_or(0),
        BalanceTarget::Count(n) => n,
    };
    if let Some(cap) = cap {
        goal = goal.min(cap);
    }

    let mut out: Vec<BalanceEntry> = assignments
        .iter()
        .enumerate()
        .map(|(source, &cluster)| BalanceEntry { source, cluster, augmented: false })
        .collect();
    let mut rng = pcg32(seed);
    for (cluster, group) in members.iter().enumerate() {
        if group.len() >= goal {
            continue;
        }
        if group.is_empty() {
            return Err(DatasetError::EmptyCluster { cluster, target: goal });
        }
        for _ in group.len()..goal {
            let source = group[rng.random_range(0..group.len())];
            out.push(BalanceEntry { source, cluster, augmented: true });
        }
    }
    Ok(out)
}

/// [`balance`] applied to manifest records; every output record carries
/// its `cluster_id`, duplicates are flagged `augmented`.
pub fn balance_manifest(
    records: &[ManifestRecord],
    assignments: &[usize],
    k: usize,
    seed: u64,
    target: BalanceTarget,
    cap: Option<usize>,
) -> Result<Vec<ManifestRecord>> {
    if assignments.len() != records.len() {
        return Err(DatasetError::AssignmentLength { assignments: assignments.len(), records: records.len() });
    }
    Ok(balance(assignments, k, seed, target, cap)?
        .into_iter()
        .map(|e| ManifestRecord { cluster_id: Some(e.cluster), augmented: e.augmented, ..records[e.source].clone() })
        .collect())
}
