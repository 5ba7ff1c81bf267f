use serde::{Deserialize, Serialize};

use super::geometry::{centroid_dist, iou};
use super::{ConsistencyConfig, ConsistencyError, MaskSet, Result};

/// Up to this many masks on the smaller side, matching is exactly optimal.
/// Larger problems fall back to greedy assignment.
pub const EXACT_ASSIGNMENT_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub ori_index: usize,
    pub gen_index: usize,
    pub iou: f64,
    pub dist: f64,
    /// `iou − lambda_dist · dist`.
    pub score: f64,
    /// Filled in by [`super::assess_consistency`].
    pub pixel_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchOutcome {
    /// Sorted by `ori_index`.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_ori: Vec<usize>,
    pub unmatched_gen: Vec<usize>,
}

impl MatchOutcome {
    /// Sum of pair scores in ascending `ori_index` order.
    pub fn total_score(&self) -> f64 {
        self.pairs.iter().map(|p| p.score).sum()
    }
}

/// Pairs original and generated masks.
///
/// Edges need `iou ≥ tau_match` and a positive score; non-positive edges
/// can never raise the total, so they are left unmatched. The assignment
/// maximizes the summed score: exactly (Hungarian) when the smaller side
/// has at most [`EXACT_ASSIGNMENT_LIMIT`] masks, greedily by descending
/// score (ties: lower ori index, then lower gen index) otherwise.
pub fn match_masks(ori: &MaskSet, gen: &MaskSet, cfg: &ConsistencyConfig) -> Result<MatchOutcome> {
    if let (Some(a), Some(b)) = (ori.dims(), gen.dims()) {
        if a != b {
            return Err(ConsistencyError::DimensionMismatch { what: "generated mask set", expected: a, found: b });
        }
    }
    let (m, n) = (ori.len(), gen.len());
    // candidate edges
    let mut edges: Vec<Vec<Option<MatchedPair>>> = Vec::with_capacity(m);
    for (i, a) in ori.masks().iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for (j, b) in gen.masks().iter().enumerate() {
            let overlap = iou(a, b)?;
            let edge = if overlap >= cfg.tau_match {
                let dist = centroid_dist(a, b)?;
                let score = overlap - cfg.lambda_dist * dist;
                (score > 0.0).then_some(MatchedPair {
                    ori_index: i,
                    gen_index: j,
                    iou: overlap,
                    dist,
                    score,
                    pixel_diff: None,
                })
            } else {
                None
            };
            row.push(edge);
        }
        edges.push(row);
    }

    let chosen: Vec<(usize, usize)> = if m.min(n) == 0 {
        Vec::new()
    } else if m.min(n) <= EXACT_ASSIGNMENT_LIMIT {
        let weights: Vec<Vec<f64>> =
            edges.iter().map(|row| row.iter().map(|e| e.as_ref().map_or(0.0, |p| p.score)).collect()).collect();
        hungarian_max(&weights)
            .into_iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .filter(|&(i, j)| edges[i][j].is_some())
            .collect()
    } else {
        greedy(&edges, m, n)
    };

    let mut ori_used = vec![false; m];
    let mut gen_used = vec![false; n];
    let mut pairs = Vec::with_capacity(chosen.len());
    for (i, j) in chosen {
        ori_used[i] = true;
        gen_used[j] = true;
        pairs.push(edges[i][j].take().expect("chosen edge exists"));
    }
    pairs.sort_by_key(|p| p.ori_index);
    Ok(MatchOutcome {
        pairs,
        unmatched_ori: (0..m).filter(|&i| !ori_used[i]).collect(),
        unmatched_gen: (0..n).filter(|&j| !gen_used[j]).collect(),
    })
}

fn greedy(edges: &[Vec<Option<MatchedPair>>], m: usize, n: usize) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(f64, usize, usize)> =
        edges.iter().flatten().flatten().map(|p| (p.score, p.ori_index, p.gen_index)).collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut ori_used = vec![false; m];
    let mut gen_used = vec![false; n];
    let mut out = Vec::new();
    for (_, i, j) in candidates {
        if !ori_used[i] && !gen_used[j] {
            ori_used[i] = true;
            gen_used[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Maximum-weight assignment on a rectangular matrix (Hungarian algorithm
/// on negated weights). Every row of the smaller side is assigned; the
/// result maps each row to its column, `None` for rows left over when
/// rows outnumber columns.
pub fn hungarian_max(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| weights[i][j]).collect()).collect();
        let mut out = vec![None; rows];
        for (j, i) in hungarian_max(&transposed).into_iter().enumerate() {
            if let Some(i) = i {
                out[i] = Some(j);
            }
        }
        return out;
    }

    // Potentials formulation, rows ≤ cols, 1-based with a virtual column 0.
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut min_v = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < min_v[j] {
                        min_v[j] = cur;
                        way[j] = j0;
                    }
                    if min_v[j] < delta {
                        delta = min_v[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            out[owner[j] - 1] = Some(j - 1);
        }
    }
    out
}
