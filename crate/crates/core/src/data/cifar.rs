//! CIFAR-100 binary records: one coarse label byte, one fine label byte,
//! then 3072 pixel bytes stored as three 1024-byte channel planes of a
//! 32x32 image.

use std::path::Path;

use crate::error::CoactError;

pub const CIFAR_EDGE: usize = 32;
pub const CIFAR_PIXEL_BYTES: usize = 3 * CIFAR_EDGE * CIFAR_EDGE;
pub const CIFAR100_RECORD_BYTES: usize = 2 + CIFAR_PIXEL_BYTES;
pub const CIFAR100_FINE_CLASSES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CifarDataset {
    pub coarse: Vec<u8>,
    pub fine: Vec<u8>,
    /// Sample-major plane layout, `count * 3072` bytes.
    pub pixels: Vec<u8>,
}

impl CifarDataset {
    pub fn len(&self) -> usize {
        self.fine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine.is_empty()
    }

    /// Pixel in HWC terms for record `i`; storage is plane-major.
    pub fn pixel(&self, i: usize, y: usize, x: usize, c: usize) -> u8 {
        self.pixels[i * CIFAR_PIXEL_BYTES + c * CIFAR_EDGE * CIFAR_EDGE + y * CIFAR_EDGE + x]
    }
}

pub fn parse_cifar100(bytes: &[u8]) -> Result<CifarDataset, CoactError> {
    if bytes.is_empty() || bytes.len() % CIFAR100_RECORD_BYTES != 0 {
        return Err(CoactError::Format {
            detail: format!(
                "{} bytes is not a whole number of {CIFAR100_RECORD_BYTES}-byte records",
                bytes.len()
            ),
            offset: Some((bytes.len() - bytes.len() % CIFAR100_RECORD_BYTES) as u64),
        });
    }
    let count = bytes.len() / CIFAR100_RECORD_BYTES;
    let mut ds = CifarDataset {
        coarse: Vec::with_capacity(count),
        fine: Vec::with_capacity(count),
        pixels: Vec::with_capacity(count * CIFAR_PIXEL_BYTES),
    };
    for record in bytes.chunks_exact(CIFAR100_RECORD_BYTES) {
        if record[1] as usize >= CIFAR100_FINE_CLASSES {
            return Err(CoactError::Format {
                detail: format!("fine label {} out of range", record[1]),
                offset: Some((ds.len() * CIFAR100_RECORD_BYTES + 1) as u64),
            });
        }
        ds.coarse.push(record[0]);
        ds.fine.push(record[1]);
        ds.pixels.extend_from_slice(&record[2..]);
    }
    Ok(ds)
}

pub fn read_cifar100(path: &Path) -> Result<CifarDataset, CoactError> {
    parse_cifar100(&std::fs::read(path)?)
}

pub fn write_cifar100(path: &Path, ds: &CifarDataset) -> Result<(), CoactError> {
    if ds.coarse.len() != ds.fine.len() || ds.pixels.len() != ds.len() * CIFAR_PIXEL_BYTES {
        return Err(CoactError::Format {
            detail: format!(
                "inconsistent dataset: {} coarse, {} fine, {} pixel bytes",
                ds.coarse.len(),
                ds.fine.len(),
                ds.pixels.len()
            ),
            offset: None,
        });
    }
    let mut out = Vec::with_capacity(ds.len() * CIFAR100_RECORD_BYTES);
    for i in 0..ds.len() {
        out.push(ds.coarse[i]);
        out.push(ds.fine[i]);
        out.extend_from_slice(&ds.pixels[i * CIFAR_PIXEL_BYTES..(i + 1) * CIFAR_PIXEL_BYTES]);
    }
    std::fs::write(path, out)?;
    Ok(())
}
