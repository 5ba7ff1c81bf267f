//! JSONL manifest: one original image per line with its generated
//! variants and their human pass (1) / fail (0) labels. Paths are relative
//! to the manifest file's directory unless absolute.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DatasetError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedImage {
    pub embedding: String,
    pub image: String,
    pub masks: Vec<String>,
    /// 1 = passed human review, 0 = failed.
    pub label: u8,
}

impl GeneratedImage {
    pub fn passed(&self) -> bool {
        self.label == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub original_embedding: String,
    pub original_image: String,
    pub original_masks: Vec<String>,
    pub generated: Vec<GeneratedImage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<usize>,
    /// Set on records duplicated by category balancing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub augmented: bool,
}

const RECORD_FIELDS: [&str; 5] = ["id", "original_embedding", "original_image", "original_masks", "generated"];
const GENERATED_FIELDS: [&str; 4] = ["embedding", "image", "masks", "label"];

fn parse_line(line: usize, text: &str) -> Result<ManifestRecord> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| DatasetError::MalformedJson { line, message: e.to_string() })?;
    let obj =
        value.as_object().ok_or_else(|| DatasetError::Invalid { line, message: "expected a JSON object".into() })?;
    for field in RECORD_FIELDS {
        if !obj.contains_key(field) {
            return Err(DatasetError::MissingField { line, field: field.into() });
        }
    }
    if let Some(items) = obj["generated"].as_array() {
        for (k, item) in items.iter().enumerate() {
            for field in GENERATED_FIELDS {
                if item.get(field).is_none() {
                    return Err(DatasetError::MissingField { line, field: format!("generated[{k}].{field}") });
                }
            }
            let label = &item["label"];
            if !matches!(label.as_u64(), Some(0 | 1)) {
                return Err(DatasetError::BadLabel { line, value: label.to_string() });
            }
        }
    }
    let record: ManifestRecord =
        serde_json::from_value(value).map_err(|e| DatasetError::Invalid { line, message: e.to_string() })?;
    validate(line, &record)?;
    Ok(record)
}

fn validate(line: usize, r: &ManifestRecord) -> Result<()> {
    let invalid = |message: String| Err(DatasetError::Invalid { line, message });
    if r.id.is_empty() {
        return invalid("empty id".into());
    }
    if r.generated.is_empty() {
        return invalid(format!("record {}: no generated images", r.id));
    }
    let paths = std::iter::once(&r.original_embedding)
        .chain(std::iter::once(&r.original_image))
        .chain(&r.original_masks)
        .chain(r.generated.iter().flat_map(|g| [&g.embedding, &g.image].into_iter().chain(&g.masks)));
    for p in paths {
        if p.is_empty() {
            return invalid(format!("record {}: empty path", r.id));
        }
    }
    Ok(())
}

/// Parses a JSONL manifest. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn load_manifest<R: BufRead>(source: R) -> Result<Vec<ManifestRecord>> {
    let mut out = Vec::new();
    for (idx, text) in source.lines().enumerate() {
        let line = idx + 1;
        let text = text.map_err(|e| DatasetError::MalformedJson { line, message: e.to_string() })?;
        if text.trim().is_empty() {
            continue;
        }
        out.push(parse_line(line, &text)?);
    }
    Ok(out)
}

pub fn save_manifest<W: Write>(records: &[ManifestRecord], mut sink: W) -> std::io::Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(std::io::Error::other)?;
        sink.write_all(line.as_bytes())?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_manifest_file(path: &Path) -> Result<Vec<ManifestRecord>> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    load_manifest(std::io::BufReader::new(file))
}

pub fn save_manifest_file(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let io = |source| DatasetError::Io { path: path.to_path_buf(), source };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    save_manifest(records, &mut w).map_err(io)?;
    w.flush().map_err(io)
}
