//! Manifest handling and training-data preparation: feature clustering,
//! per-cluster oversampling, seeded splits and preference-pair
//! construction.

mod balance;
mod kmeans;
mod manifest;
mod pairs;
mod split;

use std::path::PathBuf;

use thiserror::Error;

pub use balance::{balance, balance_manifest, BalanceEntry, BalanceTarget};
pub use kmeans::{kmeans, ClusterModel, KMeansOptions};
pub use manifest::{
    load_manifest, load_manifest_file, save_manifest, save_manifest_file, GeneratedImage, ManifestRecord,
};
pub use pairs::{build_pairs, load_pairs, record_features, EmbeddingCache, PairPlan, PairRef, SkippedRecord};
pub use split::{split, split_manifest, SplitPlan};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: malformed JSON: {message}")]
    MalformedJson { line: usize, message: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: String },
    #[error("line {line}: label must be 0 or 1, found {value}")]
    BadLabel { line: usize, value: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("record {record}: embedding {path}: {message}")]
    Embedding { record: String, path: PathBuf, message: String },
    #[error("k-means needs at least k points: n = {n}, k = {k}")]
    TooFewPoints { n: usize, k: usize },
    #[error("k-means input: {0}")]
    BadPoints(String),
    #[error("cluster {cluster} is empty but the balancing target is {target}")]
    EmptyCluster { cluster: usize, target: usize },
    #[error("assignments cover {assignments} records, expected {records}")]
    AssignmentLength { assignments: usize, records: usize },
    #[error("assignment {value} at record {index} is not below k = {k}")]
    AssignmentOutOfRange { index: usize, value: usize, k: usize },
    #[error("bad split fractions ({train}, {val}): both must be positive with sum ≤ 1")]
    BadFractions { train: f64, val: f64 },
}

pub type Result<T> = std::result::Result<T, DatasetError>;
