use serde::{Deserialize, Serialize};

use super::assignment::{match_masks, MatchedPair};
use super::{ConsistencyConfig, ConsistencyError, DiffAggregate, MaskSet, Result};
use crate::tensor_io::{BinaryMask, RgbImage};

/// Reasons attached to a verdict. Consistent results carry only
/// [`Diagnostic::NoOriginalProducts`], if anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// The original image has no product masks at all.
    NoOriginalProducts,
    /// An original product has no counterpart in the generated image.
    ProductMissing { ori_index: usize },
    /// A generated mask above the area floor matches no original product.
    UnexpectedProduct { gen_index: usize, area_fraction: f64 },
    /// The aggregated pixel difference exceeds `delta_diff`.
    PixelDiffExceeded { diff: f64, delta_diff: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResult {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_ori: Vec<usize>,
    pub unmatched_gen: Vec<usize>,
    /// Unmatched generated masks below the area floor (subset of `unmatched_gen`).
    pub ignored_gen: Vec<usize>,
    pub max_pixel_diff: Option<f64>,
    pub mean_pixel_diff: Option<f64>,
    pub aggregate: DiffAggregate,
    pub consistent: bool,
    pub diagnostics: Vec<Diagnostic>,
}

fn image_dims(img: &RgbImage) -> (usize, usize) {
    (img.width(), img.height())
}

/// Mean over `region` pixels and the three channels of `|ori − gen| / 255`.
pub fn pair_pixel_diff(img_ori: &RgbImage, img_gen: &RgbImage, region: &BinaryMask) -> Result<f64> {
    let dims = image_dims(img_ori);
    if image_dims(img_gen) != dims {
        return Err(ConsistencyError::DimensionMismatch {
            what: "generated image",
            expected: dims,
            found: image_dims(img_gen),
        });
    }
    if (region.width(), region.height()) != dims {
        return Err(ConsistencyError::DimensionMismatch {
            what: "diff region",
            expected: dims,
            found: (region.width(), region.height()),
        });
    }
    let (mut sum, mut count) = (0u64, 0u64);
    for ((&inside, a), b) in
        region.bits().iter().zip(img_ori.pixels().chunks_exact(3)).zip(img_gen.pixels().chunks_exact(3))
    {
        if inside {
            sum += a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as u64).sum::<u64>();
            count += 1;
        }
    }
    if count == 0 {
        return Err(ConsistencyError::EmptyRegion);
    }
    Ok(sum as f64 / (255 * 3 * count) as f64)
}

fn union(a: &BinaryMask, b: &BinaryMask) -> BinaryMask {
    let bits = a.bits().iter().zip(b.bits()).map(|(&x, &y)| x || y).collect();
    BinaryMask::new(a.width(), a.height(), bits).expect("same dims")
}

/// Full product-consistency verdict for one original/generated pair.
///
/// The image is consistent when every original product is matched, no
/// significant unmatched product appears in the generated image, and the
/// aggregated pixel difference over matched regions (mask union) stays
/// within `delta_diff`.
pub fn assess_consistency(
    img_ori: &RgbImage,
    img_gen: &RgbImage,
    ori: &MaskSet,
    gen: &MaskSet,
    cfg: &ConsistencyConfig,
) -> Result<ConsistencyResult> {
    cfg.validate()?;
    let dims = image_dims(img_ori);
    if image_dims(img_gen) != dims {
        return Err(ConsistencyError::DimensionMismatch {
            what: "generated image",
            expected: dims,
            found: image_dims(img_gen),
        });
    }
    for (what, set) in [("original masks", ori), ("generated masks", gen)] {
        if let Some(found) = set.dims() {
            if found != dims {
                return Err(ConsistencyError::DimensionMismatch { what, expected: dims, found });
            }
        }
    }

    let outcome = match_masks(ori, gen, cfg)?;
    let mut pairs = outcome.pairs;
    for p in pairs.iter_mut() {
        let region = union(&ori.masks()[p.ori_index], &gen.masks()[p.gen_index]);
        p.pixel_diff = Some(pair_pixel_diff(img_ori, img_gen, &region)?);
    }
    let diffs: Vec<f64> = pairs.iter().filter_map(|p| p.pixel_diff).collect();
    let max_pixel_diff = diffs.iter().copied().reduce(f64::max);
    let mean_pixel_diff = (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64);

    let mut diagnostics = Vec::new();
    if ori.is_empty() {
        diagnostics.push(Diagnostic::NoOriginalProducts);
    }
    for &ori_index in &outcome.unmatched_ori {
        diagnostics.push(Diagnostic::ProductMissing { ori_index });
    }
    let total_px = (dims.0 * dims.1) as f64;
    let mut ignored_gen = Vec::new();
    for &gen_index in &outcome.unmatched_gen {
        let area_fraction = gen.masks()[gen_index].area() as f64 / total_px;
        if area_fraction >= cfg.area_floor {
            diagnostics.push(Diagnostic::UnexpectedProduct { gen_index, area_fraction });
        } else {
            ignored_gen.push(gen_index);
        }
    }
    let aggregated = match cfg.aggregate {
        DiffAggregate::Max => max_pixel_diff,
        DiffAggregate::Mean => mean_pixel_diff,
    };
    if let Some(diff) = aggregated {
        if diff > cfg.delta_diff {
            diagnostics.push(Diagnostic::PixelDiffExceeded { diff, delta_diff: cfg.delta_diff });
        }
    }
    let consistent = diagnostics.iter().all(|d| matches!(d, Diagnostic::NoOriginalProducts));
    Ok(ConsistencyResult {
        pairs,
        unmatched_ori: outcome.unmatched_ori,
        unmatched_gen: outcome.unmatched_gen,
        ignored_gen,
        max_pixel_diff,
        mean_pixel_diff,
        aggregate: cfg.aggregate,
        consistent,
        diagnostics,
    })
}
