//! Binary PGM (`P5`) masks and PPM (`P6`) images, maxval 255 only.

use std::io::{Read, Write};

use super::{BinaryMask, FormatError, Result, RgbImage};

/// Byte values at or above this are product pixels.
pub const MASK_THRESHOLD: u8 = 128;

struct Header {
    width: usize,
    height: usize,
}

/// Parses `magic w h maxval` and consumes the single whitespace byte that
/// precedes the raster.
fn parse_header(bytes: &[u8], magic: &[u8; 2], ascii_twin: &[u8; 2]) -> Result<(Header, usize)> {
    if bytes.len() < 2 {
        return Err(FormatError::MalformedHeader("file too short".into()));
    }
    if &bytes[..2] == ascii_twin {
        return Err(FormatError::UnsupportedFormat(format!(
            "ASCII {} is not supported, use binary {}",
            String::from_utf8_lossy(ascii_twin),
            String::from_utf8_lossy(magic)
        )));
    }
    if &bytes[..2] != magic {
        return Err(FormatError::UnsupportedFormat(format!(
            "expected {} header, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&bytes[..2])
        )));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(FormatError::MalformedHeader(format!("expected a number at byte {start}")));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text.parse().map_err(|_| FormatError::MalformedHeader(format!("number out of range: {text}")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(FormatError::MalformedHeader("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(FormatError::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(FormatError::MalformedHeader(format!("degenerate size {width}x{height}")));
    }
    Ok((Header { width: width as usize, height: height as usize }, pos))
}

pub fn read_mask<R: Read>(mut source: R) -> Result<BinaryMask> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let (h, offset) = parse_header(&bytes, b"P5", b"P2")?;
    let raster = &bytes[offset..];
    let expected = h.width * h.height;
    if raster.len() != expected {
        return Err(FormatError::SizeMismatch { expected, actual: raster.len() });
    }
    BinaryMask::new(h.width, h.height, raster.iter().map(|&v| v >= MASK_THRESHOLD).collect())
}

pub fn write_mask<W: Write>(m: &BinaryMask, mut sink: W) -> Result<usize> {
    let header = format!("P5\n{} {}\n255\n", m.width(), m.height());
    let mut buf = Vec::with_capacity(header.len() + m.bits().len());
    buf.extend_from_slice(header.as_bytes());
    buf.extend(m.bits().iter().map(|&b| if b { 255u8 } else { 0 }));
    sink.write_all(&buf)?;
    Ok(buf.len())
}

pub fn read_ppm<R: Read>(mut source: R) -> Result<RgbImage> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let (h, offset) = parse_header(&bytes, b"P6", b"P3")?;
    let raster = &bytes[offset..];
    let expected = 3 * h.width * h.height;
    if raster.len() != expected {
        return Err(FormatError::SizeMismatch { expected, actual: raster.len() });
    }
    RgbImage::new(h.width, h.height, raster.to_vec())
}

pub fn write_ppm<W: Write>(img: &RgbImage, mut sink: W) -> Result<usize> {
    let header = format!("P6\n{} {}\n255\n", img.width(), img.height());
    sink.write_all(header.as_bytes())?;
    sink.write_all(img.pixels())?;
    Ok(header.len() + img.pixels().len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pgm(w: usize, h: usize, raster: &[u8]) -> Vec<u8> {
        let mut v = format!("P5\n{w} {h}\n255\n").into_bytes();
        v.extend_from_slice(raster);
        v
    }

    #[test]
    fn saturated_pgm_is_all_true() {
        let m = read_mask(&pgm(2, 2, &[255; 4])[..]).unwrap();
        assert!(m.bits().iter().all(|&b| b));
    }

    #[test]
    fn threshold_at_128() {
        let m = read_mask(&pgm(4, 1, &[0, 127, 128, 255])[..]).unwrap();
        assert_eq!(m.bits(), &[false, false, true, true]);
    }

    #[test]
    fn ascii_pgm_rejected() {
        let err = read_mask(&b"P2\n1 1\n255\n0\n"[..]).unwrap_err();
        assert!(matches!(err, FormatError::UnsupportedFormat(_)), "{err}");
    }

    #[test]
    fn maxval_other_than_255_rejected() {
        let mut bytes = b"P5\n1 1\n15\n".to_vec();
        bytes.push(3);
        assert!(matches!(read_mask(&bytes[..]).unwrap_err(), FormatError::UnsupportedMaxval(15)));
    }

    #[test]
    fn pgm_size_mismatch() {
        let err = read_mask(&pgm(2, 2, &[0; 3])[..]).unwrap_err();
        assert!(matches!(err, FormatError::SizeMismatch { expected: 4, actual: 3 }));
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5 # mask\n# another\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 200]);
        assert_eq!(read_mask(&bytes[..]).unwrap().bits(), &[false, true]);
    }

    #[test]
    fn write_3x2_layout() {
        let m = BinaryMask::new(3, 2, vec![true, false, true, false, false, true]).unwrap();
        let mut buf = Vec::new();
        let n = write_mask(&m, &mut buf).unwrap();
        assert_eq!(&buf[..11], b"P5\n3 2\n255\n");
        assert_eq!(&buf[11..], &[255, 0, 255, 0, 0, 255]);
        assert_eq!(n, 17);
    }

    #[test]
    fn all_false_payload_zero() {
        let m = BinaryMask::empty(5, 3).unwrap();
        let mut buf = Vec::new();
        write_mask(&m, &mut buf).unwrap();
        assert!(buf[b"P5\n5 3\n255\n".len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn single_red_pixel_ppm() {
        let img = read_ppm(&b"P6\n1 1\n255\n\xff\x00\x00"[..]).unwrap();
        assert_eq!(img.pixel(0, 0), [255, 0, 0]);
    }

    #[test]
    fn ascii_ppm_rejected() {
        assert!(matches!(read_ppm(&b"P3\n1 1\n255\n0 0 0\n"[..]).unwrap_err(), FormatError::UnsupportedFormat(_)));
    }

    proptest! {
        #[test]
        fn mask_roundtrip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let mut state = seed;
            let m = BinaryMask::from_fn(w, h, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) & 1 == 1
            }).unwrap();
            let mut buf = Vec::new();
            write_mask(&m, &mut buf).unwrap();
            prop_assert_eq!(read_mask(&buf[..]).unwrap(), m);
        }

        #[test]
        fn ppm_roundtrip(w in 1usize..12, h in 1usize..12, fill in any::<u8>()) {
            let pixels: Vec<u8> = (0..3 * w * h).map(|i| (i as u8).wrapping_mul(31).wrapping_add(fill)).collect();
            let img = RgbImage::new(w, h, pixels).unwrap();
            let mut buf = Vec::new();
            write_ppm(&img, &mut buf).unwrap();
            prop_assert_eq!(read_ppm(&buf[..]).unwrap(), img);
        }
    }
}
