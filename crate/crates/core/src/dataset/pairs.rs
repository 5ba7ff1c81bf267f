//! (original, good, bad) triples from labelled generations.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{DatasetError, ManifestRecord, Result};
use crate::reward::{EmbeddingSequence, TrainingPair};
use crate::tensor_io::load_tensor;

/// Indices into `records` and into that record's `generated` list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairRef {
    pub record: usize,
    pub good: usize,
    pub bad: usize,
}

/// An original that produced no pairs because one label class is absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    pub id: String,
    pub passes: usize,
    pub fails: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairPlan {
    pub pairs: Vec<PairRef>,
    pub skipped: Vec<SkippedRecord>,
}

/// Cross product of passes and fails within each record, in record order,
/// then pass order, then fail order.
pub fn build_pairs(records: &[ManifestRecord]) -> PairPlan {
    let mut plan = PairPlan::default();
    for (record, r) in records.iter().enumerate() {
        let (good, bad): (Vec<usize>, Vec<usize>) = (0..r.generated.len()).partition(|&g| r.generated[g].passed());
        if good.is_empty() || bad.is_empty() {
            plan.skipped.push(SkippedRecord { id: r.id.clone(), passes: good.len(), fails: bad.len() });
            continue;
        }
        for &g in &good {
            for &b in &bad {
                plan.pairs.push(PairRef { record, good: g, bad: b });
            }
        }
    }
    plan
}

/// Loads embedding files relative to a base directory, reading each path
/// at most once.
#[derive(Debug)]
pub struct EmbeddingCache {
    base: PathBuf,
    loaded: HashMap<PathBuf, EmbeddingSequence>,
}

impl EmbeddingCache {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        Self { base: base.into(), loaded: HashMap::new() }
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        self.base.join(path)
    }

    pub fn get(&mut self, record: &str, path: &str) -> Result<&EmbeddingSequence> {
        let full = self.resolve(path);
        if !self.loaded.contains_key(&full) {
            let err = |message: String| DatasetError::Embedding { record: record.into(), path: full.clone(), message };
            let tensor = load_tensor(&full).map_err(|e| err(e.to_string()))?;
            let seq = EmbeddingSequence::from_tensor(&tensor).map_err(|e| err(e.to_string()))?;
            self.loaded.insert(full.clone(), seq);
        }
        Ok(&self.loaded[&full])
    }
}

/// Builds the pair plan and materialises every pair. Embedding widths must
/// agree within a pair.
pub fn load_pairs(records: &[ManifestRecord], base: &Path) -> Result<(Vec<TrainingPair>, PairPlan)> {
    let plan = build_pairs(records);
    let mut cache = EmbeddingCache::new(base);
    let mut out = Vec::with_capacity(plan.pairs.len());
    for p in &plan.pairs {
        let r = &records[p.record];
        let original = cache.get(&r.id, &r.original_embedding)?.clone();
        let good = cache.get(&r.id, &r.generated[p.good].embedding)?.clone();
        let bad_path = &r.generated[p.bad].embedding;
        let bad = cache.get(&r.id, bad_path)?.clone();
        let pair = TrainingPair::new(original, good, bad).map_err(|e| DatasetError::Embedding {
            record: r.id.clone(),
            path: cache.resolve(bad_path),
            message: e.to_string(),
        })?;
        out.push(pair);
    }
    Ok((out, plan))
}

/// Mean-pooled original embedding per record, the clustering feature.
pub fn record_features(records: &[ManifestRecord], cache: &mut EmbeddingCache) -> Result<Vec<Vec<f64>>> {
    records.iter().map(|r| Ok(cache.get(&r.id, &r.original_embedding)?.tokens().mean_rows())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GeneratedImage;
    use crate::tensor_io::{save_tensor, TensorF32};

    fn record(id: &str, labels: &[u8]) -> ManifestRecord {
        ManifestRecord {
            id: id.into(),
            original_embedding: format!("{id}.hft"),
            original_image: format!("{id}.ppm"),
            original_masks: vec![],
            generated: labels
                .iter()
                .enumerate()
                .map(|(g, &label)| GeneratedImage {
                    embedding: format!("{id}_g{g}.hft"),
                    image: format!("{id}_g{g}.ppm"),
                    masks: vec![],
                    label,
                })
                .collect(),
            cluster_id: None,
            augmented: false,
        }
    }

    #[test]
    fn pair_counts_are_pass_times_fail() {
        assert_eq!(build_pairs(&[record("a", &[1, 1, 0])]).pairs.len(), 2);
        assert_eq!(build_pairs(&[record("a", &[1, 0, 1, 0, 0])]).pairs.len(), 6);
        let plan = build_pairs(&[record("a", &[1, 1]), record("b", &[0, 1])]);
        assert_eq!(plan.skipped, vec![SkippedRecord { id: "a".into(), passes: 2, fails: 0 }]);
        assert_eq!(plan.pairs, vec![PairRef { record: 1, good: 1, bad: 0 }]);
    }

    #[test]
    fn pair_order_is_record_then_good_then_bad() {
        let plan = build_pairs(&[record("a", &[0, 1, 0, 1])]);
        let got: Vec<_> = plan.pairs.iter().map(|p| (p.good, p.bad)).collect();
        assert_eq!(got, vec![(1, 0), (1, 2), (3, 0), (3, 2)]);
    }

    fn write(dir: &Path, name: &str, dims: Vec<usize>, v: f32) {
        let n = dims.iter().product();
        save_tensor(&dir.join(name), &TensorF32::new(dims, vec![v; n]).unwrap()).unwrap();
    }

    #[test]
    fn load_pairs_reads_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.hft", vec![2, 3], 1.0);
        write(dir.path(), "a_g0.hft", vec![2, 3], 2.0);
        write(dir.path(), "a_g1.hft", vec![3], 3.0);
        let (pairs, plan) = load_pairs(&[record("a", &[1, 0])], dir.path()).unwrap();
        assert_eq!(plan.pairs.len(), 1);
        assert_eq!(pairs[0].good.tokens().get(1, 2), 2.0);
        assert_eq!(pairs[0].bad.len(), 1);

        let mut cache = EmbeddingCache::new(dir.path());
        let feats = record_features(&[record("a", &[1])], &mut cache).unwrap();
        assert_eq!(feats, vec![vec![1.0; 3]]);
    }

    #[test]
    fn missing_or_mismatched_embedding_names_record() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.hft", vec![2, 3], 1.0);
        write(dir.path(), "a_g0.hft", vec![2, 3], 2.0);
        let err = load_pairs(&[record("a", &[1, 0])], dir.path()).unwrap_err();
        assert!(matches!(err, DatasetError::Embedding { ref record, .. } if record == "a"), "{err}");
        assert!(err.to_string().contains("a_g1.hft"));

        write(dir.path(), "a_g1.hft", vec![2, 4], 3.0);
        let err = load_pairs(&[record("a", &[1, 0])], dir.path()).unwrap_err();
        assert!(err.to_string().contains("record a"), "{err}");
    }
}
