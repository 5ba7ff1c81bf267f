//! On-disk formats shared by the engine and the model bridge.
//!
//! * HFT1: little-endian f32 tensors (embeddings, parameter tensors).
//! * PGM `P5`: binary product masks.
//! * PPM `P6` and 8-bit PNG: RGB images.

mod hft;
mod png_rgb;
mod pnm;

use std::path::Path;

use thiserror::Error;

pub use hft::{read_tensor, write_tensor, HFT1_MAGIC, HFT1_VERSION};
pub use png_rgb::{read_png, write_png};
pub use pnm::{read_mask, read_ppm, write_mask, write_ppm};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: &'static str, found: Vec<u8> },
    #[error("unsupported HFT1 version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("unsupported HFT1 dtype {0:#04x} (only f32 = 0x00)")]
    UnsupportedDtype(u8),
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("trailing data: expected {expected} payload bytes, found {actual}")]
    TrailingData { expected: usize, actual: usize },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("invalid shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: &'static str },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("unsupported maxval {0} (only 255)")]
    UnsupportedMaxval(u32),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("pixel data size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("unsupported bit depth: {0} bits per sample")]
    UnsupportedBitDepth(u8),
    #[error("decode failure: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// Dense row-major f32 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorF32 {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl TensorF32 {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if dims.is_empty() {
            return Err(FormatError::InvalidShape { dims, reason: "at least one dimension" });
        }
        if dims.contains(&0) {
            return Err(FormatError::InvalidShape { dims, reason: "dimensions must be positive" });
        }
        let numel = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(FormatError::InvalidShape { dims: dims.clone(), reason: "element count overflows" })?;
        if numel != data.len() {
            return Err(FormatError::SizeMismatch { expected: numel, actual: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite { index });
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn into_parts(self) -> (Vec<usize>, Vec<f32>) {
        (self.dims, self.data)
    }
}

/// Row-major boolean mask; `true` marks product pixels.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("area", &self.area())
            .finish()
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FormatError::InvalidShape {
                dims: vec![width, height],
                reason: "mask width and height must be at least 1",
            });
        }
        if bits.len() != width * height {
            return Err(FormatError::SizeMismatch { expected: width * height, actual: bits.len() });
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    /// Mask with `true` wherever `pred(x, y)` holds.
    pub fn from_fn(width: usize, height: usize, mut pred: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(pred(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Number of `true` pixels.
    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_dims(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Row-major 8-bit RGB image.
#[derive(Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RgbImage").field("width", &self.width).field("height", &self.height).finish()
    }
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FormatError::InvalidShape {
                dims: vec![width, height],
                reason: "image width and height must be at least 1",
            });
        }
        if pixels.len() != 3 * width * height {
            return Err(FormatError::SizeMismatch { expected: 3 * width * height, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, rgb.iter().copied().cycle().take(3 * width * height).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Png,
}

impl ImageFormat {
    /// Guess from a file extension (`.ppm`, `.png`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ppm" => Some(Self::Ppm),
            "png" => Some(Self::Png),
            _ => None,
        }
    }
}

pub fn read_image<R: std::io::Read>(source: R, format: ImageFormat) -> Result<RgbImage> {
    match format {
        ImageFormat::Ppm => read_ppm(source),
        ImageFormat::Png => read_png(source),
    }
}

pub fn load_tensor(path: &Path) -> Result<TensorF32> {
    read_tensor(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_tensor(path: &Path, t: &TensorF32) -> Result<usize> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let n = write_tensor(t, &mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(n)
}

pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    read_mask(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_mask(path: &Path, m: &BinaryMask) -> Result<usize> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let n = write_mask(m, &mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(n)
}

/// Load a `.ppm` or `.png` image, picking the decoder from the extension.
pub fn load_image(path: &Path) -> Result<RgbImage> {
    let format = ImageFormat::from_path(path)
        .ok_or_else(|| FormatError::UnsupportedFormat(format!("unknown image extension: {}", path.display())))?;
    read_image(std::io::BufReader::new(std::fs::File::open(path)?), format)
}

pub fn save_ppm(path: &Path, img: &RgbImage) -> Result<usize> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let n = write_ppm(img, &mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(n)
}

pub fn save_png(path: &Path, img: &RgbImage) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_png(img, &mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

/// Picks the encoder from the extension.
pub fn save_image(path: &Path, img: &RgbImage) -> Result<()> {
    match ImageFormat::from_path(path) {
        Some(ImageFormat::Ppm) => save_ppm(path, img).map(|_| ()),
        Some(ImageFormat::Png) => save_png(path, img),
        None => Err(FormatError::UnsupportedFormat(format!("unknown image extension: {}", path.display()))),
    }
}
