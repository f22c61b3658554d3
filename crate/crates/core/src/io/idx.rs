//! The IDX binary format: a big-endian magic `0x0000_08TT` (unsigned bytes,
//! `TT` dimensions), one big-endian `u32` per dimension, then the payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Raw unsigned-byte images, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.height * self.width;
        &self.pixels[i * size..(i + 1) * size]
    }
}

fn read_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::TruncatedFile(format!("header ends before {what}")))
}

fn parse(bytes: &[u8], magic: u32) -> Result<(Vec<usize>, &[u8])> {
    let found = read_u32(bytes, 0, "the magic number")?;
    if found != magic {
        return Err(Error::BadMagic { expected: magic, found });
    }
    let ndim = (magic & 0xff) as usize;
    let dims = (0..ndim)
        .map(|k| read_u32(bytes, 4 + 4 * k, "the dimension sizes").map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let start = 4 + 4 * ndim;
    let len: usize = dims.iter().product();
    let payload = &bytes[start..];
    if payload.len() < len {
        return Err(Error::TruncatedFile(format!("payload has {} of {len} bytes", payload.len())));
    }
    Ok((dims, &payload[..len]))
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    let (dims, payload) = parse(bytes, IMAGES_MAGIC)?;
    Ok(IdxImages {
        count: dims[0],
        height: dims[1],
        width: dims[2],
        pixels: payload.to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    Ok(parse(bytes, LABELS_MAGIC)?.1.to_vec())
}

pub fn read_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    parse_images(&fs::read(path)?)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_labels(&fs::read(path)?)
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGES_MAGIC, images.count as u32, images.height as u32, images.width as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn write_images(path: impl AsRef<Path>, images: &IdxImages) -> Result<()> {
    Ok(fs::write(path, encode_images(images))?)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    Ok(fs::write(path, encode_labels(labels))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let images = IdxImages { count: 2, height: 2, width: 3, pixels: (0..12).collect() };
        let bytes = encode_images(&images);
        assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
        assert_eq!(parse_images(&bytes).unwrap(), images);
        assert_eq!(parse_images(&bytes).unwrap().image(1), &[6, 7, 8, 9, 10, 11]);
        assert_eq!(parse_labels(&encode_labels(&[3, 1, 4])).unwrap(), vec![3, 1, 4]);
    }

    #[test]
    fn bad_files() {
        let labels = encode_labels(&[1, 2]);
        assert!(matches!(
            parse_images(&labels),
            Err(Error::BadMagic { expected: IMAGES_MAGIC, found: LABELS_MAGIC })
        ));
        assert!(matches!(parse_labels(&labels[..9]), Err(Error::TruncatedFile(_))));
        assert!(matches!(parse_labels(&labels[..6]), Err(Error::TruncatedFile(_))));
    }
}
