//! IDX image and label containers: big-endian magic and dimensions, raw u8
//! payload. Readers enforce magic numbers and exact lengths; writers exist
//! so ingestion round-trips bit-exact.

use std::path::Path;

use crate::error::CoactError;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    /// Row-major, sample-major: `count * height * width` bytes.
    pub pixels: Vec<u8>,
}

fn format_err(detail: impl Into<String>, offset: u64) -> CoactError {
    CoactError::Format {
        detail: detail.into(),
        offset: Some(offset),
    }
}

fn read_u32_be(bytes: &[u8], offset: usize, what: &str) -> Result<u32, CoactError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(format_err(
            format!("truncated before {what}: need {end} bytes, have {}", bytes.len()),
            offset as u64,
        ));
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages, CoactError> {
    let magic = read_u32_be(bytes, 0, "magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(format_err(
            format!("image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
            0,
        ));
    }
    let count = read_u32_be(bytes, 4, "image count")? as usize;
    let height = read_u32_be(bytes, 8, "height")? as usize;
    let width = read_u32_be(bytes, 12, "width")? as usize;
    let expected = 16 + count * height * width;
    if bytes.len() != expected {
        return Err(format_err(
            format!(
                "{count} images of {height}x{width} need {expected} bytes, file has {}",
                bytes.len()
            ),
            16,
        ));
    }
    Ok(IdxImages {
        count,
        height,
        width,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, CoactError> {
    let magic = read_u32_be(bytes, 0, "magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(format_err(
            format!("label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
            0,
        ));
    }
    let count = read_u32_be(bytes, 4, "label count")? as usize;
    let expected = 8 + count;
    if bytes.len() != expected {
        return Err(format_err(
            format!("{count} labels need {expected} bytes, file has {}", bytes.len()),
            8,
        ));
    }
    Ok(bytes[8..].to_vec())
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages, CoactError> {
    parse_idx_images(&std::fs::read(path)?)
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>, CoactError> {
    parse_idx_labels(&std::fs::read(path)?)
}

pub fn write_idx_images(path: &Path, images: &IdxImages) -> Result<(), CoactError> {
    if images.pixels.len() != images.count * images.height * images.width {
        return Err(CoactError::Format {
            detail: format!(
                "pixel buffer holds {} bytes for {} {}x{} images",
                images.pixels.len(),
                images.count,
                images.height,
                images.width
            ),
            offset: None,
        });
    }
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.count as u32).to_be_bytes());
    out.extend_from_slice(&(images.height as u32).to_be_bytes());
    out.extend_from_slice(&(images.width as u32).to_be_bytes());
    out.extend_from_slice(&images.pixels);
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<(), CoactError> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    std::fs::write(path, out)?;
    Ok(())
}
