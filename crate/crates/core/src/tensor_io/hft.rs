//! HFT1 tensor container.
//!
//! Layout (little-endian):
//! - magic `HFT1` (4 bytes)
//! - version `0x01`, dtype `0x00` (f32)
//! - ndim: u16
//! - dims: ndim * u32
//! - payload: f32 * product(dims)

use std::io::{Read, Write};

use super::{FormatError, Result, TensorF32};

pub const HFT1_MAGIC: &[u8; 4] = b"HFT1";
pub const HFT1_VERSION: u8 = 0x01;
const DTYPE_F32: u8 = 0x00;

/// Returns the number of bytes written.
pub fn write_tensor<W: Write>(t: &TensorF32, mut sink: W) -> Result<usize> {
    let ndim = u16::try_from(t.dims().len())
        .map_err(|_| FormatError::InvalidShape { dims: t.dims().to_vec(), reason: "more than 65535 dims" })?;
    let mut buf = Vec::with_capacity(8 + 4 * t.dims().len() + 4 * t.numel());
    buf.extend_from_slice(HFT1_MAGIC);
    buf.push(HFT1_VERSION);
    buf.push(DTYPE_F32);
    buf.extend_from_slice(&ndim.to_le_bytes());
    for &d in t.dims() {
        let d = u32::try_from(d)
            .map_err(|_| FormatError::InvalidShape { dims: t.dims().to_vec(), reason: "dimension exceeds u32" })?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&buf)?;
    Ok(buf.len())
}

pub fn read_tensor<R: Read>(mut source: R) -> Result<TensorF32> {
    let mut head = [0u8; 8];
    read_header_bytes(&mut source, &mut head)?;
    if &head[..4] != HFT1_MAGIC {
        return Err(FormatError::BadMagic { expected: "HFT1", found: head[..4].to_vec() });
    }
    if head[4] != HFT1_VERSION {
        return Err(FormatError::UnsupportedVersion(head[4]));
    }
    if head[5] != DTYPE_F32 {
        return Err(FormatError::UnsupportedDtype(head[5]));
    }
    let ndim = u16::from_le_bytes([head[6], head[7]]) as usize;
    let mut dim_bytes = vec![0u8; 4 * ndim];
    read_header_bytes(&mut source, &mut dim_bytes)?;
    let dims: Vec<usize> =
        dim_bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize).collect();
    if dims.is_empty() || dims.contains(&0) {
        return Err(FormatError::InvalidShape { dims, reason: "dimensions must be positive" });
    }
    let expected = dims
        .iter()
        .try_fold(4usize, |acc, &d| acc.checked_mul(d))
        .ok_or(FormatError::InvalidShape { dims: dims.clone(), reason: "element count overflows" })?;

    let mut payload = Vec::with_capacity(expected.min(1 << 26));
    source.read_to_end(&mut payload)?;
    if payload.len() < expected {
        return Err(FormatError::Truncated { expected, actual: payload.len() });
    }
    if payload.len() > expected {
        return Err(FormatError::TrailingData { expected, actual: payload.len() });
    }
    let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    TensorF32::new(dims, data)
}

fn read_header_bytes<R: Read>(source: &mut R, buf: &mut [u8]) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => {
                // A short magic is still reported as a magic problem.
                if filled < 4 && buf.len() == 8 {
                    return Err(FormatError::BadMagic { expected: "HFT1", found: buf[..filled].to_vec() });
                }
                return Err(FormatError::Truncated { expected: buf.len(), actual: filled });
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
