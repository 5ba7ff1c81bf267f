//! Lloyd's k-means with k-means++ seeding.

use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::{DatasetError, Result};
use crate::rng::pcg32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once no centroid moves by this much (Euclidean).
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { max_iter: 300, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment step, including the final one.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid per point (lowest index on ties) and the inertia.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], out: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, slot) in points.iter().zip(out.iter_mut()) {
        let (best, d) = centroids.iter().map(|c| sq_dist(p, c)).enumerate().fold((0, f64::INFINITY), |acc, (i, d)| {
            if d < acc.1 {
                (i, d)
            } else {
                acc
            }
        });
        *slot = best;
        inertia += d;
    }
    inertia
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut crate::rng::Pcg32) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target ≥ acc; take the last positive weight
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            // every point coincides with a centroid
            chosen.iter().position(|&c| !c).expect("n ≥ k")
        };
        chosen[pick] = true;
        for (slot, p) in nearest.iter_mut().zip(points) {
            *slot = slot.min(sq_dist(p, &points[pick]));
        }
        centroids.push(points[pick].clone());
    }
    centroids
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, opts: KMeansOptions) -> Result<ClusterModel> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(DatasetError::TooFewPoints { n, k });
    }
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(DatasetError::BadPoints("points must share a positive dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(DatasetError::BadPoints("non-finite coordinate".into()));
    }

    let mut rng = pcg32(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..opts.max_iter {
        iterations += 1;
        let inertia = assign(points, &centroids, &mut assignments);
        trace.push(inertia);

        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut taken = vec![false; n];
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let next = if counts[c] > 0 {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            } else {
                // reseed with the point farthest from its current centroid
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .map(|i| (i, sq_dist(&points[i], &centroids[assignments[i]])))
                    .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, dd)| if dd > acc.1 { (i, dd) } else { acc })
                    .0;
                taken[far] = true;
                points[far].clone()
            };
            shift = shift.max(sq_dist(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if shift < opts.tol {
            break;
        }
    }
    let inertia = assign(points, &centroids, &mut assignments);
    trace.push(inertia);
    Ok(ClusterModel { k, centroids, assignments, inertia, iterations, inertia_trace: trace })
}
