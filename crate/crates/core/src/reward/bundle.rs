//! Parameter bundle: `params.json` names one HFT1 file per tensor, and
//! `config.json` stores the training configuration.
//!
//! Weights are stored as f32; loading widens them back to f64.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::params::TENSOR_NAMES;
use super::{RewardHeadConfig, RewardHeadParams};
use crate::tensor_io::{load_tensor, save_tensor, FormatError, TensorF32};

pub const BUNDLE_HEADER: &str = "params.json";
pub const CONFIG_FILE: &str = "config.json";
const FORMAT: &str = "hfpc-reward-head";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Tensor { path: PathBuf, source: FormatError },
    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    dtype: String,
    d: usize,
    hidden: usize,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    file: String,
    dims: Vec<usize>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io { path: path.to_path_buf(), source }
}

/// Writes the bundle into `dir` (created if missing). Returns written files.
pub fn save_bundle(
    dir: &Path,
    params: &RewardHeadParams,
    config: &RewardHeadConfig,
) -> Result<Vec<PathBuf>, BundleError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut tensors = Vec::new();
    for ((name, dims), values) in TENSOR_NAMES.iter().zip(params.shapes()).zip(params.slices()) {
        let file = format!("{name}.hft");
        let path = dir.join(&file);
        let t = TensorF32::new(dims.clone(), values.iter().map(|&v| v as f32).collect())
            .map_err(|source| BundleError::Tensor { path: path.clone(), source })?;
        save_tensor(&path, &t).map_err(|source| BundleError::Tensor { path: path.clone(), source })?;
        written.push(path);
        tensors.push(TensorEntry { name: name.to_string(), file, dims });
    }
    let header = Header {
        format: FORMAT.into(),
        version: 1,
        dtype: "f32".into(),
        d: params.d(),
        hidden: params.hidden(),
        tensors,
    };
    for (file, json) in
        [(BUNDLE_HEADER, serde_json::to_string_pretty(&header)), (CONFIG_FILE, serde_json::to_string_pretty(config))]
    {
        let path = dir.join(file);
        let json = json.map_err(|source| BundleError::Json { path: path.clone(), source })?;
        fs::write(&path, json + "\n").map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

pub fn load_bundle(dir: &Path) -> Result<(RewardHeadParams, RewardHeadConfig), BundleError> {
    let header_path = dir.join(BUNDLE_HEADER);
    let text = fs::read_to_string(&header_path).map_err(io_err(&header_path))?;
    let header: Header =
        serde_json::from_str(&text).map_err(|source| BundleError::Json { path: header_path.clone(), source })?;
    let invalid = |reason: String| BundleError::Invalid { path: header_path.clone(), reason };
    if header.format != FORMAT || header.version != 1 || header.dtype != "f32" {
        return Err(invalid(format!("unsupported bundle {} v{} ({})", header.format, header.version, header.dtype)));
    }

    let mut params = RewardHeadParams::zeros(header.d, header.hidden);
    let shapes = params.shapes();
    for (idx, name) in TENSOR_NAMES.iter().enumerate() {
        let entry =
            header.tensors.iter().find(|e| e.name == *name).ok_or_else(|| invalid(format!("missing tensor {name}")))?;
        let path = dir.join(&entry.file);
        let t = load_tensor(&path).map_err(|source| BundleError::Tensor { path: path.clone(), source })?;
        if t.dims() != shapes[idx].as_slice() {
            return Err(BundleError::Invalid {
                path,
                reason: format!("tensor {name} has dims {:?}, expected {:?}", t.dims(), shapes[idx]),
            });
        }
        for (dst, &src) in params.slices_mut()[idx].iter_mut().zip(t.data()) {
            *dst = src as f64;
        }
    }

    let config_path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&config_path).map_err(io_err(&config_path))?;
    let config: RewardHeadConfig =
        serde_json::from_str(&text).map_err(|source| BundleError::Json { path: config_path.clone(), source })?;
    if config.d != header.d || config.hidden != header.hidden {
        return Err(BundleError::Invalid {
            path: config_path,
            reason: format!(
                "config shape ({}, {}) disagrees with params ({}, {})",
                config.d, config.hidden, header.d, header.hidden
            ),
        });
    }
    Ok((params, config))
}

/// Rounds every entry through f32, matching what a bundle roundtrip yields.
pub fn quantize_f32(params: &RewardHeadParams) -> RewardHeadParams {
    let mut out = params.clone();
    for s in out.slices_mut() {
        s.iter_mut().for_each(|v| *v = *v as f32 as f64);
    }
    out
}
