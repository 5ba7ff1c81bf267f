use super::{ConsistencyError, Result};
use crate::tensor_io::BinaryMask;

fn check_dims(a: &BinaryMask, b: &BinaryMask) -> Result<()> {
    if !a.same_dims(b) {
        return Err(ConsistencyError::DimensionMismatch {
            what: "mask pair",
            expected: (a.width(), a.height()),
            found: (b.width(), b.height()),
        });
    }
    Ok(())
}

/// `|a ∩ b| / |a ∪ b|`; 0 when both masks are empty.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    check_dims(a, b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

/// Centroid of the true pixels, with pixel centers normalized as
/// `((x + 0.5) / W, (y + 0.5) / H)`.
pub fn centroid(m: &BinaryMask) -> Result<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0usize, 0usize, 0usize);
    for y in 0..m.height() {
        for x in 0..m.width() {
            if m.get(x, y) {
                sx += x;
                sy += y;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(ConsistencyError::EmptyRegion);
    }
    let cx = (sx as f64 / n as f64 + 0.5) / m.width() as f64;
    let cy = (sy as f64 / n as f64 + 0.5) / m.height() as f64;
    Ok((cx, cy))
}

/// Euclidean distance between normalized centroids, in `[0, √2]`.
pub fn centroid_dist(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    check_dims(a, b)?;
    let (ax, ay) = centroid(a)?;
    let (bx, by) = centroid(b)?;
    Ok((ax - bx).hypot(ay - by))
}
