//! 8-bit RGB / RGBA PNG decoding. Alpha is composited over white.

use std::io::{Cursor, Read, Write};

use png::{BitDepth, ColorType, Transformations};

use super::{FormatError, Result, RgbImage};

pub fn read_png<R: Read>(mut source: R) -> Result<RgbImage> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| FormatError::Decode(e.to_string()))?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if depth != BitDepth::Eight {
        return Err(FormatError::UnsupportedBitDepth(depth as u8));
    }
    let channels = match color {
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        other => return Err(FormatError::UnsupportedFormat(format!("PNG color type {other:?}, expected RGB or RGBA"))),
    };
    let size = reader.output_buffer_size().ok_or_else(|| FormatError::Decode("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| FormatError::Decode(e.to_string()))?;
    let (width, height) = (frame.width as usize, frame.height as usize);
    let mut pixels = Vec::with_capacity(3 * width * height);
    for row in buf[..frame.line_size * height].chunks_exact(frame.line_size) {
        for px in row[..channels * width].chunks_exact(channels) {
            if channels == 3 {
                pixels.extend_from_slice(px);
            } else {
                let a = px[3] as u32;
                for &c in &px[..3] {
                    // round(c·a/255 + 255·(1 − a/255))
                    let v = (c as u32 * a + 255 * (255 - a) + 127) / 255;
                    pixels.push(v as u8);
                }
            }
        }
    }
    RgbImage::new(width, height, pixels)
}

/// Encode as 8-bit RGB PNG.
pub fn write_png<W: Write>(img: &RgbImage, sink: W) -> Result<()> {
    let mut encoder = png::Encoder::new(sink, img.width() as u32, img.height() as u32);
    encoder.set_color(ColorType::Rgb);
    encoder.set_depth(BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| FormatError::Decode(e.to_string()))?;
    writer.write_image_data(img.pixels()).map_err(|e| FormatError::Decode(e.to_string()))?;
    writer.finish().map_err(|e| FormatError::Decode(e.to_string()))?;
    Ok(())
}
