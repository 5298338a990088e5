//! IDX container parsing, optionally gzip-wrapped.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{invalid, Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Images stored row-major, one `rows * cols` byte grid per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImageSet {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl RawImageSet {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        let size = rows * cols;
        if size == 0 {
            return Err(invalid("rows/cols", "images must have at least one pixel"));
        }
        if !pixels.len().is_multiple_of(size) {
            return Err(invalid("pixels", "pixel buffer is not a whole number of images"));
        }
        let images = pixels.len() / size;
        if images != labels.len() {
            return Err(Error::CountMismatch {
                images,
                labels: labels.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            pixels,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn image_size(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, index: usize) -> &[u8] {
        let size = self.image_size();
        &self.pixels[index * size..(index + 1) * size]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    let word = bytes.get(offset..end).ok_or(Error::Truncated {
        expected: end,
        actual: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(word.try_into().expect("slice of length 4")))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

fn payload(bytes: &[u8], header: usize, len: usize) -> Result<&[u8]> {
    let expected = header + len;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    Ok(&bytes[header..expected])
}

/// Parses an image file; returns `(rows, cols, pixels)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    check_magic(bytes, IMAGE_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let data = payload(bytes, 16, count * rows * cols)?;
    Ok((rows, cols, data.to_vec()))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

pub fn encode_images(set: &RawImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + set.pixels.len());
    for word in [
        IMAGE_MAGIC,
        set.len() as u32,
        set.rows as u32,
        set.cols as u32,
    ] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend_from_slice(&set.pixels);
    out
}

pub fn encode_labels(set: &RawImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + set.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(set.len() as u32).to_be_bytes());
    out.extend_from_slice(&set.labels);
    out
}

/// Reads a file, inflating it first if it starts with the gzip magic.
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let raw = fs::read(path).map_err(io)?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_idx(images: &Path, labels: &Path) -> Result<RawImageSet> {
    let (rows, cols, pixels) = parse_images(&read_maybe_gzip(images)?)?;
    let labels = parse_labels(&read_maybe_gzip(labels)?)?;
    RawImageSet::new(rows, cols, pixels, labels)
}

/// Two-class subset with `class_a -> +1`, `class_b -> -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySelection {
    /// Row `k` is the image at `source_indices[k]`, pixels as `f64`.
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub source_indices: Vec<usize>,
}

impl BinarySelection {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn filter_binary(set: &RawImageSet, class_a: u8, class_b: u8) -> Result<BinarySelection> {
    if class_a == class_b {
        return Err(invalid(
            "class_b",
            format!("classes must differ, both are {class_a}"),
        ));
    }
    let mut out = BinarySelection {
        images: Vec::new(),
        labels: Vec::new(),
        source_indices: Vec::new(),
    };
    for (i, &label) in set.labels.iter().enumerate() {
        let y = if label == class_a {
            1.0
        } else if label == class_b {
            -1.0
        } else {
            continue;
        };
        out.images
            .push(set.image(i).iter().map(|&p| f64::from(p)).collect());
        out.labels.push(y);
        out.source_indices.push(i);
    }
    if out.is_empty() {
        return Err(Error::EmptySelection { class_a, class_b });
    }
    Ok(out)
}
