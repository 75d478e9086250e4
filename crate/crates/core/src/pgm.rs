//! Binary portable graymap output.

use std::fs;
use std::path::Path;

use crate::bitmap::Bitmap;
use crate::error::{Error, Result};

/// `P5` bytes for a bitmap, each pixel blown up to a `scale x scale` block.
/// ON pixels are black (0), OFF pixels white (255).
pub fn encode_pgm(image: &Bitmap, scale: usize) -> Vec<u8> {
    let scale = scale.max(1);
    let (w, h) = (image.width() * scale, image.height() * scale);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(if image.get(x / scale, y / scale) { 0 } else { 255 });
        }
    }
    out
}

pub fn write_pgm(path: &Path, image: &Bitmap, scale: usize) -> Result<()> {
    fs::write(path, encode_pgm(image, scale)).map_err(|e| Error::io(path, e))
}

/// Inverse of [`encode_pgm`] at scale 1: pixels darker than mid-gray are ON.
pub fn decode_pgm(bytes: &[u8]) -> Result<Bitmap> {
    let bad = |m: &str| Error::Parse {
        line: None,
        message: format!("pgm: {m}"),
    };
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..i]).map_err(|_| bad("header is not text"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary graymap"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h) = (num(fields[1])?, num(fields[2])?);
    let pixels = &bytes[i + 1..];
    if pixels.len() != w * h {
        return Err(bad("pixel count does not match header"));
    }
    Ok(Bitmap::from_bits(w, h, pixels.iter().map(|&p| p < 128).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_header() {
        let mut b = Bitmap::new(3, 2);
        b.set(0, 0, true);
        b.set(2, 1, true);
        let bytes = encode_pgm(&b, 1);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 6..], &[0, 255, 255, 255, 255, 0]);
        assert_eq!(decode_pgm(&bytes).unwrap(), b);
        assert_eq!(encode_pgm(&b, 2).len(), "P5\n6 4\n255\n".len() + 24);
    }
}
